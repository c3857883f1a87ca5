#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cranet/cli/config.h"
#include "cranet/diagnostics.h"
#include "cranet/eval.h"
#include "cranet/training.h"

namespace cranet::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3, kExitVerification = 4 };

const std::vector<std::string>& command_names();

struct LoadedData {
  IngestReport ingest;
  DatasetSplit split;
};

// parse → dedupe → (binarize) → min-count filter → split.
LoadedData load_data(const RunConfig& cfg);

struct ModelRun {
  std::string label;
  ReflectionMode mode = ReflectionMode::kImplicit;
  HyperParams hyper;
  FitResult fit;
  MetricReport test;
};

// Trains on split.train and scores split.test. A non-empty `dense_inputs`
// turns the run into the neighbour-imputed plain baseline.
ModelRun train_and_evaluate(const std::string& label, const DatasetSplit& split, ReflectionMode mode,
                            const HyperParams& h, const RunConfig& cfg,
                            const std::vector<DenseVector>* dense_inputs = nullptr,
                            std::ostream* log = nullptr);

// CRANet (cfg.mode), CRANet-R (plain), CRANet-N (plain on neighbour-imputed
// input), in that order.
std::vector<ModelRun> run_ablation(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log = nullptr);

// Every decay kind over cfg.alpha_grid, in (decay, alpha) order.
std::vector<ModelRun> run_decay_study(const RunConfig& cfg, const DatasetSplit& split,
                                      std::ostream* log = nullptr);
// Lowest validation RMSE among runs with the given decay kind.
const ModelRun& best_by_validation(const std::vector<ModelRun>& runs, std::optional<DecayKind> decay = {});

// Item-based then user-based.
std::vector<ModelRun> run_orientation_study(const RunConfig& cfg, const DatasetSplit& split,
                                            std::ostream* log = nullptr);

struct SparsityRow {
  std::size_t group = 0;
  std::size_t vectors = 0;
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  ModelRun run;
};

// Five groups of training vectors by observed count; each group is trained
// and tested on its own, for cfg.mode and for the plain autoencoder.
std::vector<SparsityRow> run_sparsity_study(const RunConfig& cfg, const DatasetSplit& split,
                                            std::ostream* log = nullptr);

struct GridRow {
  double alpha = 0.0;
  double lambda = 0.0;
  std::size_t best_epoch = 0;
  double val_rmse = 0.0;
};

struct GridResult {
  std::vector<GridRow> rows;
  HyperParams best;
};

// Shared λ for every regularizer over cfg.lambda_grid × cfg.alpha_grid,
// scored on validation only. Requires a non-empty validation set.
GridResult run_grid(const RunConfig& cfg, const DatasetSplit& split, std::ostream* log = nullptr);

struct VerifyEntry {
  TrialReport report;
  bool expect_pass = true;
  bool ok() const { return report.pass == expect_pass; }
};

struct VerifyOptions {
  std::size_t alignment_trials = 10000;
  std::size_t equivalence_trials = 100;
  std::size_t gradient_trials = 100;
  std::uint64_t seed = 1;
};

std::vector<VerifyEntry> run_verify(const VerifyOptions& options);

// Parameter counts at the reference size, against allocated tensors.
std::vector<VerifyEntry> run_param_audit();

// Runs one subcommand with artifacts under cfg.out. Exceptions propagate.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

// run_command with exceptions mapped to exit codes and reported on `err`.
int run_guarded(const std::string& command, const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace cranet::cli
