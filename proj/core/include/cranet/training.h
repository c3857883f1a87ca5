#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cranet/data.h"
#include "cranet/model.h"

namespace cranet {

// Each term already carries its λ weight.
struct LossBreakdown {
  double recon = 0.0;
  double l2_V = 0.0;
  double l2_W = 0.0;
  double reflect_reg = 0.0;  // λ3‖T − V·Vᵀ‖², implicit mode
  double l2_U = 0.0;         // λ4‖U‖², independent mode
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
};

// One training example: the observed vector, plus a precomputed encoder input
// for the neighbour-imputed plain baseline.
struct BatchItem {
  const SparseVector* target = nullptr;
  const DenseVector* dense_input = nullptr;
};

struct MaskedLoss {
  double loss = 0.0;
  DenseVector grad;  // ∂loss/∂prediction; zero at unobserved positions
};

// Σ over observed i of (prediction[i] − target[i])²; `observed` supplies the
// mask (its stored indices), values are read from `target`.
MaskedLoss masked_squared_error(const DenseVector& prediction, const DenseVector& target,
                                const SparseVector& observed);
// Same with the target taken from the observed vector itself.
double reconstruction_error(const DenseVector& prediction, const SparseVector& target);

LossBreakdown compute_loss(const ModelParams& p, const HyperParams& h,
                           const std::vector<BatchItem>& batch);
LossBreakdown compute_loss(const ModelParams& p, const HyperParams& h,
                           const std::vector<SparseVector>& batch);

// Exact gradient of compute_loss for every trainable tensor of the mode.
// The loss at the evaluation point is written to `loss` when given.
ModelParams compute_gradients(const ModelParams& p, const HyperParams& h,
                              const std::vector<BatchItem>& batch, LossBreakdown* loss = nullptr);
ModelParams compute_gradients(const ModelParams& p, const HyperParams& h,
                              const std::vector<SparseVector>& batch, LossBreakdown* loss = nullptr);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  ModelParams first;
  ModelParams second;
  std::size_t step = 0;

  static AdamState for_params(const ModelParams& p);
};

// sgd: θ ← θ − lr·g. adam: bias-corrected moments with the constants above.
void optimizer_step(AdamState& state, ModelParams& params, const ModelParams& grads, double lr,
                    OptimizerKind method);

// Tracks the best validation score and says when `patience` epochs have passed
// without improvement. A patience of 0 never stops.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  // Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double value);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  double best_ = 0.0;
  std::size_t best_epoch_ = 0;
  bool has_best_ = false;
  bool improved_ = false;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train;
  std::optional<double> val_rmse;
  double seconds = 0.0;
};

struct FitOptions {
  std::function<void(const EpochReport&)> on_epoch;
  const std::vector<DenseVector>* dense_inputs = nullptr;  // indexed by vector
  std::optional<ModelParams> initial;
};

struct FitResult {
  ModelParams params;  // from the best validation epoch
  std::vector<EpochReport> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_rmse;
};

// Mini-batch training over the non-empty vectors of split.train in the
// orientation given by `h`. Throws NumericalError on a non-finite loss.
FitResult fit(const DatasetSplit& split, ReflectionMode mode, const HyperParams& h,
              const FitOptions& options = {});

// CSV: epoch,recon,l2_V,l2_W,reg,total,val_rmse,seconds. With
// `zero_seconds` the timing column is written as 0 so logs are byte-stable.
void write_epoch_log(std::ostream& out, const std::vector<EpochReport>& epochs, bool zero_seconds);

}  // namespace cranet
