#include "cranet/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "cranet/encoder.h"
#include "cranet/errors.h"
#include "cranet/eval.h"
#include "cranet/random.h"

namespace cranet {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  recon += o.recon;
  l2_V += o.l2_V;
  l2_W += o.l2_W;
  reflect_reg += o.reflect_reg;
  l2_U += o.l2_U;
  total += o.total;
  return *this;
}

MaskedLoss masked_squared_error(const DenseVector& prediction, const DenseVector& target,
                                const SparseVector& observed) {
  if (prediction.dim() != observed.dim() || target.dim() != observed.dim()) {
    throw DimensionError("masked_squared_error: dimension mismatch");
  }
  MaskedLoss out;
  out.grad = DenseVector(prediction.dim());
  for (const auto& e : observed.entries()) {
    const double err = prediction[e.index] - target[e.index];
    out.loss += err * err;
    out.grad[e.index] = 2.0 * err;
  }
  return out;
}

double reconstruction_error(const DenseVector& prediction, const SparseVector& target) {
  if (prediction.dim() != target.dim()) throw DimensionError("reconstruction_error: dimension mismatch");
  double acc = 0.0;
  for (const auto& e : target.entries()) {
    const double err = prediction[e.index] - e.value;
    acc += err * err;
  }
  return acc;
}

namespace {

std::vector<BatchItem> as_items(const std::vector<SparseVector>& batch) {
  std::vector<BatchItem> items;
  items.reserve(batch.size());
  for (const auto& r : batch) items.push_back({&r, nullptr});
  return items;
}

// Regularisation terms (added once per batch) and, when `g` is given, their
// gradients.
void regularize(const ModelParams& p, const HyperParams& h, LossBreakdown& loss, ModelParams* g) {
  loss.l2_V = h.lambda1 * squared_frobenius_norm(p.V);
  loss.l2_W = h.lambda2 * squared_frobenius_norm(p.W);
  if (g != nullptr) {
    auto gv = g->V.flat();
    auto gw = g->W.flat();
    const auto v = p.V.flat();
    const auto w = p.W.flat();
    for (std::size_t i = 0; i < v.size(); ++i) gv[i] += 2.0 * h.lambda1 * v[i];
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] += 2.0 * h.lambda2 * w[i];
  }
  if (p.mode == ReflectionMode::kImplicit) {
    // D = T − V·Vᵀ; ∂/∂T = 2λ3·D, ∂/∂V = −2λ3·(D + Dᵀ)·V.
    if (h.lambda3 == 0.0) return;
    const DenseMatrix diff = subtract(p.T, gram_rows(p.V));
    loss.reflect_reg = h.lambda3 * squared_frobenius_norm(diff);
    if (g != nullptr) {
      const std::size_t d = p.hidden_dim();
      DenseMatrix sym(d, d);
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          g->T(a, b) += 2.0 * h.lambda3 * diff(a, b);
          sym(a, b) = diff(a, b) + diff(b, a);
        }
      }
      const DenseMatrix pull = multiply(sym, p.V);
      auto gv = g->V.flat();
      const auto pv = pull.flat();
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= 2.0 * h.lambda3 * pv[i];
    }
  } else if (p.mode == ReflectionMode::kIndependent) {
    loss.l2_U = h.lambda4 * squared_frobenius_norm(p.U);
    if (g != nullptr) {
      auto gu = g->U.flat();
      const auto u = p.U.flat();
      for (std::size_t i = 0; i < u.size(); ++i) gu[i] += 2.0 * h.lambda4 * u[i];
    }
  }
}

void finish(LossBreakdown& l) { l.total = l.recon + l.l2_V + l.l2_W + l.reflect_reg + l.l2_U; }

// Reconstruction loss of one vector; accumulates gradients into `g` if given.
double accumulate_vector(const ModelParams& p, const HyperParams& h, const BatchItem& item,
                         EncoderState& st, ModelParams* g) {
  const SparseVector& r = *item.target;
  encode(p, h, r, item.dense_input, st);
  const std::size_t d = p.hidden_dim();
  const auto hid = st.h.span();
  double loss = 0.0;
  DenseVector delta_h(g != nullptr ? d : 0);
  for (const auto& e : r.entries()) {
    double y = decode_at(p, hid, e.index);
    if (h.residual) y += e.value;
    const double err = y - e.value;
    loss += err * err;
    if (g == nullptr) continue;
    const double dy = 2.0 * err;
    g->b[e.index] += dy;
    double* gw = g->W.data() + e.index * d;
    const double* w = p.W.data() + e.index * d;
    for (std::size_t a = 0; a < d; ++a) {
      gw[a] += dy * hid[a];
      delta_h[a] += dy * w[a];
    }
  }
  if (g != nullptr) {
    DenseVector delta_z(d);
    for (std::size_t a = 0; a < d; ++a) delta_z[a] = delta_h[a] * hid[a] * (1.0 - hid[a]);
    backward_encoder(p, r, st, delta_z, *g);
  }
  return loss;
}

}  // namespace

LossBreakdown compute_loss(const ModelParams& p, const HyperParams& h,
                           const std::vector<BatchItem>& batch) {
  p.validate();
  if (batch.empty()) throw DimensionError("compute_loss: empty batch");
  LossBreakdown loss;
  EncoderState st;
  for (const auto& item : batch) loss.recon += accumulate_vector(p, h, item, st, nullptr);
  regularize(p, h, loss, nullptr);
  finish(loss);
  return loss;
}

LossBreakdown compute_loss(const ModelParams& p, const HyperParams& h,
                           const std::vector<SparseVector>& batch) {
  return compute_loss(p, h, as_items(batch));
}

namespace {

void gradients_into(const ModelParams& p, const HyperParams& h, const std::vector<BatchItem>& batch,
                    ModelParams& g, LossBreakdown& loss) {
  loss = LossBreakdown{};
  EncoderState st;
  for (const auto& item : batch) loss.recon += accumulate_vector(p, h, item, st, &g);
  regularize(p, h, loss, &g);
  finish(loss);
}

void zero(ModelParams& g) {
  for (auto t : g.tensors()) std::fill(t.begin(), t.end(), 0.0);
}

}  // namespace

ModelParams compute_gradients(const ModelParams& p, const HyperParams& h,
                              const std::vector<BatchItem>& batch, LossBreakdown* loss) {
  p.validate();
  if (batch.empty()) throw DimensionError("compute_gradients: empty batch");
  ModelParams g = zeros_like(p);
  LossBreakdown l;
  gradients_into(p, h, batch, g, l);
  if (loss != nullptr) *loss = l;
  return g;
}

ModelParams compute_gradients(const ModelParams& p, const HyperParams& h,
                              const std::vector<SparseVector>& batch, LossBreakdown* loss) {
  return compute_gradients(p, h, as_items(batch), loss);
}

AdamState AdamState::for_params(const ModelParams& p) {
  return AdamState{zeros_like(p), zeros_like(p), 0};
}

void optimizer_step(AdamState& state, ModelParams& params, const ModelParams& grads, double lr,
                    OptimizerKind method) {
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  if (ps.size() != gs.size()) throw DimensionError("optimizer_step: tensor count mismatch");
  if (method == OptimizerKind::kSgd) {
    for (std::size_t t = 0; t < ps.size(); ++t) {
      for (std::size_t i = 0; i < ps[t].size(); ++i) ps[t][i] -= lr * gs[t][i];
    }
    return;
  }
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(AdamState::kBeta1, step);
  const double corr2 = 1.0 - std::pow(AdamState::kBeta2, step);
  auto ms = state.first.tensors();
  auto vs = state.second.tensors();
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto p = ps[t];
    auto m = ms[t];
    auto v = vs[t];
    const auto g = gs[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
      v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
      const double mhat = m[i] / corr1;
      const double vhat = v[i] / corr2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::kEpsilon);
    }
  }
}

bool EarlyStopper::update(std::size_t epoch, double value) {
  improved_ = !has_best_ || value < best_;
  if (improved_) {
    best_ = value;
    best_epoch_ = epoch;
    has_best_ = true;
  }
  return patience_ > 0 && epoch - best_epoch_ >= patience_;
}

FitResult fit(const DatasetSplit& split, ReflectionMode mode, const HyperParams& h,
              const FitOptions& options) {
  const InteractionMatrix& train = split.train;
  const Orientation o = h.orientation;
  if (train.nnz() == 0) throw DataError("fit: training split is empty");

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < train.vector_count(o); ++j)
    if (!train.interaction_vector(j, o).empty()) active.push_back(j);

  FitResult result;
  ModelParams params = options.initial ? *options.initial
                                       : init_params(mode, train.vector_dim(o), h.hidden_dim, h.seed);
  params.validate();
  if (options.dense_inputs != nullptr && options.dense_inputs->size() != train.vector_count(o)) {
    throw DimensionError("fit: dense_inputs must have one entry per vector");
  }
  AdamState adam = AdamState::for_params(params);
  ModelParams grads = zeros_like(params);
  Rng rng(derive_seed(h.seed, 1));
  EarlyStopper stopper(h.patience);
  result.params = params;

  const std::size_t batch_size = std::max<std::size_t>(1, h.batch_size);
  std::vector<BatchItem> batch;
  for (std::size_t epoch = 1; epoch <= h.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle(std::span<std::size_t>(active), rng);
    EpochReport report;
    report.epoch = epoch;
    for (std::size_t start = 0, batch_no = 0; start < active.size(); start += batch_size, ++batch_no) {
      const std::size_t stop = std::min(active.size(), start + batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t j = active[k];
        batch.push_back({&train.interaction_vector(j, o),
                         options.dense_inputs ? &(*options.dense_inputs)[j] : nullptr});
      }
      zero(grads);
      LossBreakdown loss;
      gradients_into(params, h, batch, grads, loss);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no + 1));
      }
      report.train += loss;
      optimizer_step(adam, params, grads, h.learning_rate, h.optimizer);
    }

    if (!split.validation.empty()) {
      const Predictions pred = predict_records(params, h, train, split.validation, options.dense_inputs);
      if (!pred.pairs.empty()) report.val_rmse = rmse(pred.pairs);
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(report);
    if (options.on_epoch) options.on_epoch(report);

    const double score = report.val_rmse.value_or(report.train.total);
    if (!std::isfinite(score)) {
      throw NumericalError("non-finite validation score at epoch " + std::to_string(epoch));
    }
    const bool stop = stopper.update(epoch, score);
    if (stopper.improved()) {
      result.params = params;
      result.best_epoch = epoch;
      result.best_val_rmse = report.val_rmse;
    }
    if (stop) break;
  }
  return result;
}

void write_epoch_log(std::ostream& out, const std::vector<EpochReport>& epochs, bool zero_seconds) {
  out << "epoch,recon,l2_V,l2_W,reg,total,val_rmse,seconds\n";
  char buf[512];
  for (const auto& e : epochs) {
    const double reg = e.train.reflect_reg + e.train.l2_U;
    const std::string val = e.val_rmse ? [&] {
      char b[64];
      std::snprintf(b, sizeof(b), "%.17g", *e.val_rmse);
      return std::string(b);
    }() : std::string();
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.6f\n", e.epoch,
                  e.train.recon, e.train.l2_V, e.train.l2_W, reg, e.train.total, val.c_str(),
                  zero_seconds ? 0.0 : e.seconds);
    out << buf;
  }
}

}  // namespace cranet
