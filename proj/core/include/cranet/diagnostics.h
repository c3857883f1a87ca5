#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cranet/data.h"
#include "cranet/model.h"

namespace cranet {

struct TrialReport {
  std::string name;
  std::size_t trials = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

std::string to_text_line(const TrialReport& r);
std::string to_json_line(const TrialReport& r);

// kTied reflects with Vᵀ, kNegated with U = −Vᵀ (must fail), kRandom with an
// independent random U (no sign guarantee).
enum class AlignmentReflector { kTied, kNegated, kRandom };

// cos(s, V·(U·s)) with s = V·r. NaN when either side is
// the zero vector.
double alignment_cosine(const DenseMatrix& V, const DenseMatrix& U, const SparseVector& r);

// Minimum cosine over `trials` random (V, r) draws; passes iff min ≥ −1e−12.
TrialReport alignment_check(std::size_t n, std::size_t hidden_dim, std::size_t trials,
                            std::uint64_t seed, AlignmentReflector reflector);

// kScaling is the control: a positive diagonal, non-orthogonal B applied to
// the tied reflection, which must break the equality.
enum class EquivalenceFamily { kOrthogonal, kInvertible, kScaling };

const char* to_string(EquivalenceFamily f);

// Relative ∞-norm gap ‖a−b‖∞ / max(1e−12, ‖a‖∞).
// tied:        a = φ·VᵀV·r,  b = φ·(BV)ᵀ(BV)·r
// independent: a = φ·U·V·r,  b = φ·(U·B⁻¹)(B·V)·r
double tied_equivalence_gap(const DenseMatrix& V, const DenseMatrix& B, const SparseVector& r,
                            double alpha);
double independent_equivalence_gap(const DenseMatrix& U, const DenseMatrix& V, const DenseMatrix& B,
                                   const SparseVector& r, double alpha);

// Maximum gap over `trials`; passes iff max ≤ 1e−9.
TrialReport equivalence_check(std::size_t n, std::size_t hidden_dim, std::size_t trials,
                              std::uint64_t seed, EquivalenceFamily family);

// ‖B‖₁·‖B⁻¹‖₁.
double condition_number_l1(const DenseMatrix& B);

// Largest relative gap between every analytic gradient entry and a central
// difference with step 1e−5, denominator max(1e−6·max(1, |loss|), |analytic|,
// |numeric|).
double max_gradient_error(const ModelParams& p, const HyperParams& h,
                          const std::vector<SparseVector>& batch, double step = 1e-5);

// Random small instances (n ≤ 12, hidden_dim ≤ 8); passes iff max < 1e−4.
TrialReport finite_diff_check(ReflectionMode mode, bool residual, std::size_t n,
                              std::size_t hidden_dim, std::size_t trials, std::uint64_t seed);

// CSV with header id,count,h0..h{d-1}; one row per requested vector index.
// `id` is the raw id of the vector in the given orientation. Throws
// DimensionError for an out-of-range index.
void export_latent(std::ostream& out, const ModelParams& p, const HyperParams& h,
                   const InteractionMatrix& m, std::span<const std::size_t> indices,
                   const std::vector<DenseVector>* dense_inputs = nullptr);
void export_latent(const std::string& path, const ModelParams& p, const HyperParams& h,
                   const InteractionMatrix& m, std::span<const std::size_t> indices,
                   const std::vector<DenseVector>* dense_inputs = nullptr);

}  // namespace cranet
