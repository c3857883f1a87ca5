#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <unistd.h>

#include "cranet/cli/commands.h"
#include "cranet/cli/config.h"
#include "cranet/cli/report.h"
#include "cranet/errors.h"
#include "cranet/random.h"

namespace cranet::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cranet_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_dataset(const fs::path& dir, std::uint64_t seed = 3) {
  Rng rng(seed);
  const fs::path file = dir / "ratings.dat";
  std::ofstream out(file);
  for (int u = 1; u <= 40; ++u)
    for (int i = 1; i <= 30; ++i)
      if (uniform01(rng) < 0.35) out << u << "::" << i << "::" << 1 + uniform_index(rng, 5) << "::0\n";
  return file;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_config(const fs::path& data, const fs::path& out) {
  return load_config(std::nullopt, {{"data", data.string()},
                                    {"out", out.string()},
                                    {"dp", "6"},
                                    {"epochs", "4"},
                                    {"batch", "8"},
                                    {"lr", "0.01"},
                                    {"deterministic", "on"}});
}

TEST(Config, Defaults) {
  const RunConfig c = load_config(std::nullopt, {});
  EXPECT_EQ(c.hyper.hidden_dim, 500u);
  EXPECT_EQ(c.hyper.decay, DecayKind::kPhi1);
  EXPECT_EQ(c.hyper.alpha, 20.0);
  EXPECT_EQ(c.hyper.optimizer, OptimizerKind::kAdam);
  EXPECT_EQ(c.hyper.batch_size, 256u);
  EXPECT_EQ(c.hyper.learning_rate, 1e-3);
  EXPECT_EQ(c.hyper.max_epochs, 500u);
  EXPECT_EQ(c.hyper.patience, 10u);
  EXPECT_EQ(c.mode, ReflectionMode::kImplicit);
  EXPECT_EQ(c.task, Task::kRating);
  EXPECT_EQ(c.lambda_grid, (std::vector<double>{0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0005}));
  EXPECT_EQ(c.alpha_grid, (std::vector<double>{200, 20, 2, 0.2, 0.02}));
  EXPECT_EQ(c.k_list, (std::vector<std::size_t>{3, 5, 10}));
}

TEST(Config, FlagOverridesFile) {
  const fs::path dir = scratch("precedence");
  std::ofstream(dir / "c.txt") << "# run\nalpha = 20\ndp=32\n\n";
  const RunConfig c = load_config(dir / "c.txt", {{"alpha", "2"}});
  EXPECT_EQ(c.hyper.alpha, 2.0);
  EXPECT_EQ(c.hyper.hidden_dim, 32u);
}

TEST(Config, UnknownKeyIsNamed) {
  std::istringstream in("alpah=2\n");
  const auto kv = read_config_file(in);
  try {
    load_config(std::nullopt, kv);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("alpah"), std::string::npos);
    EXPECT_NE(msg.find("lambda1"), std::string::npos);
  }
}

TEST(Config, TypeMismatchNamesKey) {
  try {
    load_config(std::nullopt, {{"epochs", "many"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("epochs"), std::string::npos);
  }
  EXPECT_THROW(load_config(std::nullopt, {{"k_list", "3,0"}}), ConfigError);
  EXPECT_THROW(load_config(std::nullopt, {{"residual", "maybe"}}), ConfigError);
  std::istringstream bad("just words\n");
  EXPECT_THROW(read_config_file(bad), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  RunConfig c = load_config(std::nullopt, {{"alpha", "0.2"},
                                           {"mode", "tied"},
                                           {"k_list", "1,7"},
                                           {"delimiter", "\\t"},
                                           {"latent_ids", "5,9"},
                                           {"lambda_grid", "0.3,0.01"}});
  std::stringstream s;
  write_config(s, c);
  const RunConfig back = load_config(std::nullopt, read_config_file(s));
  std::stringstream again;
  write_config(again, back);
  EXPECT_EQ(s.str(), again.str());
  EXPECT_EQ(back.hyper, c.hyper);
  EXPECT_EQ(back.delimiter, '\t');
  EXPECT_EQ(back.latent_ids, (std::vector<std::int64_t>{5, 9}));
}

TEST(Run, TrainWritesRunDirectory) {
  const fs::path dir = scratch("train");
  const RunConfig c = small_config(write_dataset(dir), dir / "run");
  std::ostringstream log;
  ASSERT_EQ(run_command("train", c, log), kExitOk);
  for (const char* f : {"config.txt", "ingest.txt", "epochs.csv", "model.crae", "train.txt"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  const auto echoed = read_config_file(dir / "run" / "config.txt");
  EXPECT_EQ(echoed.at("seed"), "1");
  EXPECT_EQ(echoed.at("split_seed"), "1");
  EXPECT_EQ(echoed.at("dp"), "6");

  ASSERT_EQ(run_command("evaluate", c, log), kExitOk);
  std::ifstream in(dir / "run" / "metrics.jsonl");
  std::string line;
  std::getline(in, line);
  const MetricReport m = metric_report_from_json_line(line);
  EXPECT_EQ(to_json_line(m), line);
  EXPECT_TRUE(m.rmse.has_value());
  const std::string ingest = slurp(dir / "run" / "ingest.txt");
  EXPECT_NE(ingest.find("dropped_cold_test: " + std::to_string(m.dropped_cold_test)), std::string::npos);
}

TEST(Run, DeterministicModeIsByteIdentical) {
  const fs::path dir = scratch("det");
  const fs::path data = write_dataset(dir);
  std::ostringstream log;
  for (const char* name : {"a", "b"}) {
    const RunConfig c = small_config(data, dir / name);
    ASSERT_EQ(run_command("train", c, log), kExitOk);
    ASSERT_EQ(run_command("evaluate", c, log), kExitOk);
  }
  for (const char* f : {"epochs.csv", "metrics.jsonl", "metrics.txt", "model.crae"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Run, AblateHasThreeRows) {
  const fs::path dir = scratch("ablate");
  const RunConfig c = small_config(write_dataset(dir), dir / "run");
  std::ostringstream log;
  ASSERT_EQ(run_command("ablate", c, log), kExitOk);
  std::ifstream in(dir / "run" / "ablation.csv");
  std::string line;
  std::vector<std::string> rows;
  std::getline(in, line);
  while (std::getline(in, line)) rows.push_back(line.substr(0, line.find(',')));
  EXPECT_EQ(rows, (std::vector<std::string>{"CRANet", "CRANet-R", "CRANet-N"}));
}

TEST(Run, StudiesProduceRows) {
  const fs::path dir = scratch("studies");
  RunConfig c = small_config(write_dataset(dir), dir / "run");
  c.alpha_grid = {2, 0.2};
  c.lambda_grid = {0.1};
  std::ostringstream log;
  const LoadedData d = load_data(c);
  const auto decay = run_decay_study(c, d.split);
  EXPECT_EQ(decay.size(), 8u);
  EXPECT_EQ(best_by_validation(decay, DecayKind::kPhi4).hyper.decay, DecayKind::kPhi4);
  const auto orient = run_orientation_study(c, d.split);
  ASSERT_EQ(orient.size(), 2u);
  EXPECT_EQ(orient[1].hyper.orientation, Orientation::kUser);
  const auto sparse = run_sparsity_study(c, d.split);
  EXPECT_EQ(sparse.size(), 10u);
  for (std::size_t g = 1; g < 5; ++g) EXPECT_GE(sparse[2 * g].min_count, sparse[2 * g - 2].max_count);
  for (const char* cmd : {"decay-study", "orientation-study", "sparsity-study", "grid", "export-latent"}) {
    if (std::string(cmd) == "export-latent") ASSERT_EQ(run_command("train", c, log), kExitOk);
    EXPECT_EQ(run_command(cmd, c, log), kExitOk) << cmd;
  }
  EXPECT_TRUE(fs::exists(dir / "run" / "decay_best.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "sparsity.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "best_config.txt"));
  EXPECT_TRUE(fs::exists(dir / "run" / "latent.csv"));
}

TEST(Run, GridIgnoresTestSet) {
  const fs::path dir = scratch("grid");
  RunConfig c = small_config(write_dataset(dir), dir / "run");
  c.alpha_grid = {20, 0.2};
  c.lambda_grid = {0.5, 0.01};
  const LoadedData d = load_data(c);
  DatasetSplit poisoned = d.split;
  for (auto& r : poisoned.test) r.value = 1e6;
  poisoned.test.resize(poisoned.test.size() / 2);
  const GridResult a = run_grid(c, d.split);
  const GridResult b = run_grid(c, poisoned);
  ASSERT_EQ(a.rows.size(), 4u);
  std::ostringstream sa, sb;
  write_grid_csv(sa, a);
  write_grid_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.best, b.best);
  double best = a.rows[0].val_rmse;
  for (const auto& r : a.rows) best = std::min(best, r.val_rmse);
  bool found = false;
  for (const auto& r : a.rows)
    found = found || (r.val_rmse == best && r.alpha == a.best.alpha && r.lambda == a.best.lambda1);
  EXPECT_TRUE(found);
}

TEST(Run, ExitCodes) {
  const fs::path dir = scratch("exit");
  std::ostringstream log, err;
  RunConfig c = small_config(dir / "missing.dat", dir / "run");
  EXPECT_EQ(run_guarded("train", c, log, err), kExitData);
  EXPECT_EQ(run_guarded("bogus", c, log, err), kExitUsage);
  c.data.clear();
  EXPECT_EQ(run_guarded("train", c, log, err), kExitUsage);

  std::ofstream(dir / "huge.dat") << "1::1::1e200\n1::2::1e200\n2::1::1e200\n2::2::1e200\n3::1::1e200\n3::2::1e200\n";
  RunConfig h = small_config(dir / "huge.dat", dir / "run2");
  EXPECT_EQ(run_guarded("train", h, log, err), kExitNumerical);

  std::ofstream(dir / "blocker") << "x";
  RunConfig u = small_config(write_dataset(dir), dir / "blocker" / "run");
  EXPECT_EQ(run_guarded("train", u, log, err), kExitData);
}

TEST(Run, VerifyPasses) {
  const fs::path dir = scratch("verify");
  RunConfig c = load_config(std::nullopt, {{"out", (dir / "run").string()}});
  std::ostringstream log;
  EXPECT_EQ(run_command("verify", c, log), kExitOk) << log.str();
  EXPECT_NE(slurp(dir / "run" / "verify.txt").find("verify PASS"), std::string::npos);
}

TEST(Report, VerifyFlagsUnexpectedOutcome) {
  std::vector<VerifyEntry> e{{TrialReport{"x", 1, 0, 0, 0, 0, true, 0}, false}};
  std::ostringstream out;
  write_verify_text(out, e);
  EXPECT_NE(out.str().find("verify FAIL"), std::string::npos);
  EXPECT_FALSE(e[0].ok());
}

}  // namespace
}  // namespace cranet::cli
