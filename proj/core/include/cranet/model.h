#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cranet/data.h"
#include "cranet/numerics.h"

namespace cranet {

// How unobserved entries are reflected back before encoding.
//   kTied:        R̂ = φ·Vᵀ·V·R, masked into R̃, encoder sees R̃
//   kIndependent: R̂ = φ·U·V·R with a free N×d_p matrix U
//   kImplicit:    encoder pre-activation V·R + φ·T·V·R with a learned d_p×d_p T
//   kPlain:       no reflection (three-layer autoencoder baseline)
enum class ReflectionMode { kTied, kIndependent, kImplicit, kPlain };

enum class DecayKind { kPhi1, kPhi2, kPhi3, kPhi4 };

enum class OptimizerKind { kAdam, kSgd };

const char* to_string(ReflectionMode m);
const char* to_string(DecayKind k);
const char* to_string(OptimizerKind k);
ReflectionMode reflection_mode_from_string(const std::string& s);
DecayKind decay_kind_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);

struct HyperParams {
  std::size_t hidden_dim = 500;
  double alpha = 20.0;
  DecayKind decay = DecayKind::kPhi1;
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double lambda4 = 0.1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  bool residual = false;
  Orientation orientation = Orientation::kItem;
  std::uint64_t seed = 1;
  bool clip_predictions = true;
  OptimizerKind optimizer = OptimizerKind::kAdam;

  bool operator==(const HyperParams&) const = default;
};

// Stable key=value view used by checkpoints and run configs.
std::vector<std::pair<std::string, std::string>> to_key_values(const HyperParams& h);
// Returns false when `key` is not a hyperparameter; throws ConfigError when
// the value does not parse.
bool set_hyper_param(HyperParams& h, const std::string& key, const std::string& value);
const std::vector<std::string>& hyper_param_keys();

// Θ = {V, W, c, b} plus T (implicit) or U (independent).
struct ModelParams {
  ReflectionMode mode = ReflectionMode::kImplicit;
  DenseMatrix V;  // d_p × N
  DenseMatrix W;  // N × d_p
  DenseMatrix T;  // d_p × d_p, implicit mode only
  DenseMatrix U;  // N × d_p, independent mode only
  DenseVector c;  // d_p
  DenseVector b;  // N

  std::size_t input_dim() const { return W.rows(); }
  std::size_t hidden_dim() const { return V.rows(); }

  // Throws DimensionError when shapes disagree or the mode's extra matrix is
  // missing or present for the wrong mode.
  void validate() const;

  // Trainable tensors in a fixed order: V, W, [T|U], c, b.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;
  std::size_t scalar_count() const;

  bool operator==(const ModelParams&) const = default;
};

// Same shapes as `p`, all zeros.
ModelParams zeros_like(const ModelParams& p);

// φ1 = α/n, φ2 = α·ln(n+1)/n, φ3 = α/√n, φ4 = α; 0 for n = 0.
double decay(DecayKind kind, double alpha, std::size_t nnz);

// R̃ = R + o∘R̂ for the tied and independent modes. Observed entries keep
// their exact values.
DenseVector reflect_impute(const ModelParams& p, const HyperParams& h, const SparseVector& r);

// Full prediction H(R) of dimension N.
DenseVector forward(const ModelParams& p, const HyperParams& h, const SparseVector& r);
// Plain-mode prediction from a precomputed dense input (neighbour-imputed
// baseline). `r` supplies the residual term.
DenseVector forward_dense_input(const ModelParams& p, const HyperParams& h, const SparseVector& r,
                                const DenseVector& input);
// Hidden activation g(·) that feeds the decoder.
DenseVector hidden_code(const ModelParams& p, const HyperParams& h, const SparseVector& r);
DenseVector hidden_code_dense_input(const ModelParams& p, const DenseVector& input);

// Neighbourhood imputation: for every unobserved position i of vector j,
// the similarity-weighted mean of the values at i of the k most
// cosine-similar vectors observed at i (positive similarity only). Observed
// positions keep their values; positions without a usable neighbour stay 0.
std::vector<DenseVector> neighbor_impute(const InteractionMatrix& m, Orientation o, std::size_t k);
// Scales the imputed (unobserved) positions of each vector by
// decay(kPhi1, alpha, nnz).
void damp_imputed(std::vector<DenseVector>& imputed, const InteractionMatrix& m, Orientation o,
                  double alpha);

std::size_t param_count(ReflectionMode mode, std::size_t n, std::size_t hidden_dim);

// V, W, U ~ U(±√(6/(N+d_p))), c = b = 0, T = V·Vᵀ.
ModelParams init_params(ReflectionMode mode, std::size_t n, std::size_t hidden_dim,
                        std::uint64_t seed);

}  // namespace cranet
