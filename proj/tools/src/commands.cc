#include "cranet/cli/commands.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "cranet/checkpoint.h"
#include "cranet/cli/report.h"
#include "cranet/errors.h"
#include "cranet/parallel.h"

namespace cranet::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kReferenceN = 6040;
constexpr std::size_t kReferenceDim = 500;

void log_epoch(std::ostream& log, const std::string& label, const EpochReport& e) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "[%s] epoch %zu train=%.6g val=%s\n", label.c_str(), e.epoch, e.train.total,
                e.val_rmse ? std::to_string(*e.val_rmse).c_str() : "-");
  log << buf << std::flush;
}

void require_validation(const DatasetSplit& split, const char* what) {
  if (split.validation.empty())
    throw ConfigError(std::string(what) + " needs a validation set; raise val_frac or use more data");
}

std::size_t distinct_count(const std::vector<RatingRecord>& recs, bool users) {
  std::set<std::int64_t> ids;
  for (const auto& r : recs) ids.insert(users ? r.user : r.item);
  return ids.size();
}

fs::path checkpoint_path(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? fs::path(cfg.out) / "model.crae" : fs::path(cfg.checkpoint);
}

struct Restored {
  Checkpoint ckpt;
  LoadedData data;
};

Restored restore(const RunConfig& cfg) {
  Restored r;
  r.ckpt = load_checkpoint(checkpoint_path(cfg));
  RunConfig c = cfg;
  if (!c.split_seed) c.split_seed = r.ckpt.hyper.seed;
  r.data = load_data(c);
  const Orientation o = r.ckpt.hyper.orientation;
  const InteractionMatrix& train = r.data.split.train;
  if (r.ckpt.vector_count != train.vector_count(o) || r.ckpt.params.input_dim() != train.vector_dim(o))
    throw DataError("checkpoint shape (" + std::to_string(r.ckpt.params.input_dim()) + " x " +
                    std::to_string(r.ckpt.vector_count) + ") does not match the training split (" +
                    std::to_string(train.vector_dim(o)) + " x " + std::to_string(train.vector_count(o)) + ")");
  return r;
}

void write_ingest(const fs::path& dir, const LoadedData& d) {
  auto out = open_output(dir, "ingest.txt");
  write_ingest_report(out, d.ingest);
  for (const auto& w : d.split.report.warnings) out << "warning: " << w << '\n';
}

void write_runs(const fs::path& dir, const std::string& stem, const std::string& title,
                const std::vector<ModelRun>& runs, bool zero_seconds) {
  {
    auto out = open_output(dir, stem + ".csv");
    write_runs_csv(out, runs);
  }
  {
    auto out = open_output(dir, stem + ".jsonl");
    write_runs_jsonl(out, runs);
  }
  {
    auto out = open_output(dir, "summary.txt");
    write_runs_summary(out, title, runs);
  }
  for (const auto& r : runs) {
    std::string name = r.label;
    std::replace_if(name.begin(), name.end(), [](char c) { return c == '/' || c == '=' || c == ' '; }, '_');
    auto out = open_output(dir, "epochs_" + name + ".csv");
    write_epoch_log(out, r.fit.epochs, zero_seconds);
  }
}

int cmd_train(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const LoadedData d = load_data(cfg);
  write_ingest(dir, d);
  const HyperParams& h = cfg.hyper;
  FitOptions opts;
  opts.on_epoch = [&](const EpochReport& e) { log_epoch(log, "train", e); };
  const FitResult r = fit(d.split, cfg.mode, h, opts);
  save_checkpoint(dir / "model.crae", {r.params, h, d.split.train.vector_count(h.orientation)});
  {
    auto out = open_output(dir, "epochs.csv");
    write_epoch_log(out, r.epochs, cfg.deterministic);
  }
  auto out = open_output(dir, "train.txt");
  out << "mode: " << to_string(cfg.mode) << '\n'
      << "params: " << r.params.scalar_count() << '\n'
      << "epochs_run: " << r.epochs.size() << '\n'
      << "best_epoch: " << r.best_epoch << '\n'
      << "best_val_rmse: " << (r.best_val_rmse ? std::to_string(*r.best_val_rmse) : "-") << '\n';
  log << "trained " << to_string(cfg.mode) << ": best epoch " << r.best_epoch << " of " << r.epochs.size() << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Restored r = restore(cfg);
  write_ingest(dir, r.data);
  const MetricReport m = evaluate_split(r.ckpt.params, r.ckpt.hyper, r.data.split, cfg.task, cfg.k_list);
  {
    auto out = open_output(dir, "metrics.jsonl");
    out << to_json_line(m) << '\n';
  }
  auto out = open_output(dir, "metrics.txt");
  write_text(out, m);
  write_text(log, m);
  return kExitOk;
}

int cmd_export_latent(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Restored r = restore(cfg);
  const Orientation o = r.ckpt.hyper.orientation;
  const InteractionMatrix& train = r.data.split.train;
  const IdIndex& ids = o == Orientation::kItem ? train.items() : train.users();
  std::vector<std::size_t> idx;
  if (cfg.latent_ids.empty()) {
    for (std::size_t i = 0; i < ids.size(); ++i) idx.push_back(i);
  } else {
    for (auto raw : cfg.latent_ids) {
      const auto i = ids.find(raw);
      if (!i) throw DataError("latent id " + std::to_string(raw) + " is not in the training split");
      idx.push_back(*i);
    }
  }
  export_latent((dir / "latent.csv").string(), r.ckpt.params, r.ckpt.hyper, train, idx);
  log << "wrote " << idx.size() << " latent rows\n";
  return kExitOk;
}

int cmd_grid(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const LoadedData d = load_data(cfg);
  write_ingest(dir, d);
  const GridResult g = run_grid(cfg, d.split, &log);
  {
    auto out = open_output(dir, "grid.csv");
    write_grid_csv(out, g);
  }
  RunConfig best = cfg;
  best.hyper = g.best;
  auto out = open_output(dir, "best_config.txt");
  write_config(out, best);
  log << "best alpha=" << g.best.alpha << " lambda=" << g.best.lambda1 << '\n';
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  VerifyOptions o;
  o.seed = cfg.hyper.seed;
  auto entries = run_param_audit();
  for (auto& e : run_verify(o)) entries.push_back(std::move(e));
  {
    auto out = open_output(dir, "verify.txt");
    write_verify_text(out, entries);
  }
  {
    auto out = open_output(dir, "verify.jsonl");
    write_verify_jsonl(out, entries);
  }
  write_verify_text(log, entries);
  const bool ok = std::all_of(entries.begin(), entries.end(), [](const VerifyEntry& e) { return e.ok(); });
  return ok ? kExitOk : kExitVerification;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train",           "evaluate", "ablate", "decay-study",
                                              "sparsity-study",  "orientation-study",  "grid",
                                              "verify",          "export-latent"};
  return names;
}

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("no dataset given; set --data");
  if (!fs::exists(cfg.data)) throw DataError("dataset not found: " + cfg.data);
  LoadedData d;
  std::vector<RatingRecord> recs = parse_ratings(fs::path(cfg.data), {cfg.format, cfg.delimiter, cfg.header});
  d.ingest.lines = recs.size();
  DedupResult dd = deduplicate(std::move(recs));
  d.ingest.duplicates = dd.duplicates;
  recs = std::move(dd.records);
  if (cfg.implicit) binarize(recs);
  if (cfg.min_count > 0) {
    const std::size_t before = recs.size();
    recs = apply_min_count_filter(std::move(recs), cfg.min_count, cfg.min_count);
    d.ingest.filtered_out = before - recs.size();
  }
  if (recs.empty()) throw DataError("no records left after filtering");
  d.ingest.records = recs.size();
  d.ingest.users = distinct_count(recs, true);
  d.ingest.items = distinct_count(recs, false);
  const std::optional<RatingRange> range =
      cfg.implicit ? std::optional<RatingRange>(RatingRange{0.0, 1.0}) : std::nullopt;
  d.split = build_split(recs, {cfg.train_ratio, cfg.val_frac, cfg.resolved_split_seed()}, range);
  d.ingest.dropped_cold_validation = d.split.report.dropped_cold_validation;
  d.ingest.dropped_cold_test = d.split.report.dropped_cold_test;
  return d;
}

ModelRun train_and_evaluate(const std::string& label, const DatasetSplit& split, ReflectionMode mode,
                            const HyperParams& h, const RunConfig& cfg,
                            const std::vector<DenseVector>* dense_inputs, std::ostream* log) {
  ModelRun run;
  run.label = label;
  run.mode = mode;
  run.hyper = h;
  FitOptions opts;
  opts.dense_inputs = dense_inputs;
  if (log) opts.on_epoch = [&](const EpochReport& e) { log_epoch(*log, label, e); };
  run.fit = fit(split, mode, h, opts);
  run.test = evaluate_split(run.fit.params, h, split, cfg.task, cfg.k_list, dense_inputs);
  return run;
}

std::vector<ModelRun> run_ablation(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log) {
  const HyperParams& h = cfg.hyper;
  std::vector<ModelRun> runs;
  runs.push_back(train_and_evaluate("CRANet", split, cfg.mode, h, cfg, nullptr, log));
  runs.push_back(train_and_evaluate("CRANet-R", split, ReflectionMode::kPlain, h, cfg, nullptr, log));
  std::vector<DenseVector> imputed = neighbor_impute(split.train, h.orientation, cfg.neighbors);
  damp_imputed(imputed, split.train, h.orientation, h.alpha);
  runs.push_back(train_and_evaluate("CRANet-N", split, ReflectionMode::kPlain, h, cfg, &imputed, log));
  return runs;
}

std::vector<ModelRun> run_decay_study(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log) {
  require_validation(split, "decay-study");
  std::vector<ModelRun> runs;
  for (DecayKind k : {DecayKind::kPhi1, DecayKind::kPhi2, DecayKind::kPhi3, DecayKind::kPhi4})
    for (double alpha : cfg.alpha_grid) {
      HyperParams h = cfg.hyper;
      h.decay = k;
      h.alpha = alpha;
      char label[64];
      std::snprintf(label, sizeof(label), "%s/alpha=%g", to_string(k), alpha);
      runs.push_back(train_and_evaluate(label, split, cfg.mode, h, cfg, nullptr, log));
    }
  return runs;
}

const ModelRun& best_by_validation(const std::vector<ModelRun>& runs, std::optional<DecayKind> decay) {
  const ModelRun* best = nullptr;
  for (const auto& r : runs) {
    if (decay && r.hyper.decay != *decay) continue;
    if (!r.fit.best_val_rmse) continue;
    if (!best || *r.fit.best_val_rmse < *best->fit.best_val_rmse) best = &r;
  }
  if (!best) throw ConfigError("no run with a validation score to select from");
  return *best;
}

std::vector<ModelRun> run_orientation_study(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log) {
  std::vector<ModelRun> runs;
  for (Orientation o : {Orientation::kItem, Orientation::kUser}) {
    HyperParams h = cfg.hyper;
    h.orientation = o;
    runs.push_back(train_and_evaluate(std::string(to_string(o)) + "-based", split, cfg.mode, h, cfg, nullptr, log));
  }
  return runs;
}

std::vector<SparsityRow> run_sparsity_study(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log) {
  const Orientation o = cfg.hyper.orientation;
  const SparsityProfile prof = sparsity_partition(split.train, o, 5);
  std::vector<SparsityRow> rows;
  for (std::size_t g = 0; g < prof.groups.size(); ++g) {
    const auto& members = prof.groups[g];
    if (members.empty()) continue;
    const DatasetSplit sub = restrict_to_vectors(split, o, members);
    std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
    for (auto v : members) {
      lo = std::min(lo, prof.counts[v]);
      hi = std::max(hi, prof.counts[v]);
    }
    const std::string tag = "group" + std::to_string(g + 1) + "/";
    for (auto [label, mode] : {std::pair<std::string, ReflectionMode>{"CRANet", cfg.mode},
                               std::pair<std::string, ReflectionMode>{"AutoRec", ReflectionMode::kPlain}}) {
      rows.push_back({g + 1, members.size(), lo, hi,
                      train_and_evaluate(tag + label, sub, mode, cfg.hyper, cfg, nullptr, log)});
    }
  }
  return rows;
}

GridResult run_grid(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log) {
  require_validation(split, "grid");
  if (cfg.alpha_grid.empty() || cfg.lambda_grid.empty()) throw ConfigError("grid needs non-empty alpha_grid and lambda_grid");
  GridResult g;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : cfg.lambda_grid)
    for (double alpha : cfg.alpha_grid) {
      HyperParams h = cfg.hyper;
      h.alpha = alpha;
      h.lambda1 = h.lambda2 = h.lambda3 = h.lambda4 = lambda;
      FitOptions opts;
      char label[64];
      std::snprintf(label, sizeof(label), "alpha=%g/lambda=%g", alpha, lambda);
      if (log) opts.on_epoch = [&](const EpochReport& e) { log_epoch(*log, label, e); };
      const FitResult r = fit(split, cfg.mode, h, opts);
      g.rows.push_back({alpha, lambda, r.best_epoch, *r.best_val_rmse});
      if (*r.best_val_rmse < best) {
        best = *r.best_val_rmse;
        g.best = h;
      }
    }
  return g;
}

std::vector<VerifyEntry> run_param_audit() {
  const std::size_t n = kReferenceN, d = kReferenceDim;
  const std::size_t tied = 2 * n * d + n + d;
  const std::vector<std::pair<ReflectionMode, std::size_t>> expected{
      {ReflectionMode::kTied, 6046540},
      {ReflectionMode::kImplicit, 6296540},
      {ReflectionMode::kIndependent, tied + n * d},
      {ReflectionMode::kPlain, tied},
  };
  std::vector<VerifyEntry> out;
  for (const auto& [mode, want] : expected) {
    const ModelParams p = init_params(mode, n, d, 1);
    const double allocated = static_cast<double>(p.scalar_count());
    TrialReport r{std::string("params/") + to_string(mode), 1, allocated, allocated, allocated,
                  static_cast<double>(want), p.scalar_count() == want && param_count(mode, n, d) == want, 0};
    out.push_back({r, true});
  }
  return out;
}

std::vector<VerifyEntry> run_verify(const VerifyOptions& o) {
  std::vector<VerifyEntry> out;
  const std::uint64_t s = o.seed;
  out.push_back({alignment_check(40, 10, o.alignment_trials, s, AlignmentReflector::kTied), true});
  out.push_back({alignment_check(40, 10, std::max<std::size_t>(1, o.alignment_trials / 10), s + 1,
                                 AlignmentReflector::kNegated),
                 false});
  out.push_back({equivalence_check(40, 10, o.equivalence_trials, s + 2, EquivalenceFamily::kOrthogonal), true});
  out.push_back({equivalence_check(40, 10, o.equivalence_trials, s + 3, EquivalenceFamily::kInvertible), true});
  out.push_back({equivalence_check(40, 10, o.equivalence_trials, s + 4, EquivalenceFamily::kScaling), false});
  std::uint64_t fd_seed = s + 5;
  for (auto mode : {ReflectionMode::kTied, ReflectionMode::kIndependent, ReflectionMode::kImplicit})
    for (bool residual : {false, true})
      out.push_back({finite_diff_check(mode, residual, 12, 8, o.gradient_trials, fd_seed++), true});
  return out;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
    throw ConfigError("unknown command '" + command + "'");
  set_num_threads(cfg.deterministic ? 1
                  : cfg.threads > 0 ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency()));
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create run directory " + dir.string() + ": " + ec.message());
  {
    auto out = open_output(dir, "config.txt");
    write_config(out, cfg);
  }

  if (command == "train") return cmd_train(cfg, dir, log);
  if (command == "evaluate") return cmd_evaluate(cfg, dir, log);
  if (command == "export-latent") return cmd_export_latent(cfg, dir, log);
  if (command == "grid") return cmd_grid(cfg, dir, log);
  if (command == "verify") return cmd_verify(cfg, dir, log);

  const LoadedData d = load_data(cfg);
  write_ingest(dir, d);
  if (command == "ablate") {
    const auto runs = run_ablation(cfg, d.split, &log);
    write_runs(dir, "ablation", "ablation", runs, cfg.deterministic);
    write_runs_summary(log, "ablation", runs);
  } else if (command == "decay-study") {
    auto runs = run_decay_study(cfg, d.split, &log);
    write_runs(dir, "decay", "decay study (all runs)", runs, cfg.deterministic);
    std::vector<ModelRun> best;
    for (DecayKind k : {DecayKind::kPhi1, DecayKind::kPhi2, DecayKind::kPhi3, DecayKind::kPhi4})
      best.push_back(best_by_validation(runs, k));
    auto out = open_output(dir, "decay_best.csv");
    write_runs_csv(out, best);
    write_runs_summary(log, "decay study (best alpha per decay, by validation)", best);
  } else if (command == "orientation-study") {
    const auto runs = run_orientation_study(cfg, d.split, &log);
    write_runs(dir, "orientation", "orientation study", runs, cfg.deterministic);
    write_runs_summary(log, "orientation study", runs);
  } else if (command == "sparsity-study") {
    const auto rows = run_sparsity_study(cfg, d.split, &log);
    auto out = open_output(dir, "sparsity.csv");
    write_sparsity_csv(out, rows);
    std::vector<ModelRun> runs;
    for (const auto& r : rows) runs.push_back(r.run);
    write_runs(dir, "sparsity_runs", "sparsity study", runs, cfg.deterministic);
    write_runs_summary(log, "sparsity study", runs);
  }
  return kExitOk;
}

int run_guarded(const std::string& command, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    return run_command(command, cfg, log);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace cranet::cli
