#include "cranet/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "cranet/encoder.h"
#include "cranet/errors.h"
#include "cranet/parallel.h"
#include "cranet/random.h"
#include "cranet/training.h"

namespace cranet {

namespace {

constexpr double kAlignmentFloor = -1e-12;
constexpr double kEquivalenceTol = 1e-9;
constexpr double kGradientTol = 1e-4;
constexpr double kMaxCondition = 1e6;

DenseMatrix gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.flat()) v = scale * standard_normal(rng);
  return m;
}

// Non-negative sparse vector with integer values 1..5 and at least one entry.
SparseVector random_ratings(std::size_t n, double density, Rng& rng) {
  std::vector<SparseEntry> e;
  while (e.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform01(rng) < density) e.push_back({i, static_cast<double>(1 + uniform_index(rng, 5))});
    }
  }
  return SparseVector(n, std::move(e));
}

TrialReport summarize(std::string name, const std::vector<double>& values, double threshold,
                      std::uint64_t seed, bool pass) {
  TrialReport r;
  r.name = std::move(name);
  r.trials = values.size();
  r.threshold = threshold;
  r.seed = seed;
  r.min = *std::min_element(values.begin(), values.end());
  r.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  r.pass = pass;
  return r;
}

void require_trials(std::size_t trials) {
  if (trials == 0) throw DimensionError("diagnostics need at least one trial");
}

// φ1·x with the decay computed from r's observed count.
DenseVector scaled(const DenseVector& x, double alpha, const SparseVector& r) {
  const double phi = decay(DecayKind::kPhi1, alpha, r.nnz());
  DenseVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = phi * x[i];
  return out;
}

}  // namespace

std::string to_text_line(const TrialReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %s trials=%zu min=%.10g mean=%.10g max=%.10g threshold=%.10g seed=%llu",
                r.name.c_str(), r.pass ? "PASS" : "FAIL", r.trials, r.min, r.mean, r.max, r.threshold,
                static_cast<unsigned long long>(r.seed));
  return buf;
}

std::string to_json_line(const TrialReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["trials"] = r.trials;
  j["min"] = r.min;
  j["mean"] = r.mean;
  j["max"] = r.max;
  j["threshold"] = r.threshold;
  j["pass"] = r.pass;
  j["seed"] = r.seed;
  return j.dump();
}

double alignment_cosine(const DenseMatrix& V, const DenseMatrix& U, const SparseVector& r) {
  const DenseVector s = mat_vec(V, r);
  const DenseVector t = mat_vec(V, mat_vec(U, s));
  const double ns = norm2(s.span()), nt = norm2(t.span());
  if (ns == 0.0 || nt == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return dot(s.span(), t.span()) / (ns * nt);
}

TrialReport alignment_check(std::size_t n, std::size_t hidden_dim, std::size_t trials,
                            std::uint64_t seed, AlignmentReflector reflector) {
  require_trials(trials);
  if (n == 0 || hidden_dim == 0) throw DimensionError("alignment_check: empty dimensions");
  std::vector<double> cosines(trials);
  parallel_for(0, trials, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      Rng rng(derive_seed(seed, t));
      double c = std::numeric_limits<double>::quiet_NaN();
      while (std::isnan(c)) {
        const DenseMatrix V = gaussian(hidden_dim, n, rng);
        const SparseVector r = random_ratings(n, 0.3, rng);
        DenseMatrix U;
        switch (reflector) {
          case AlignmentReflector::kTied:
            U = transpose(V);
            break;
          case AlignmentReflector::kNegated:
            U = transpose(V);
            for (double& v : U.flat()) v = -v;
            break;
          case AlignmentReflector::kRandom:
            U = gaussian(n, hidden_dim, rng);
            break;
        }
        c = alignment_cosine(V, U, r);
      }
      cosines[t] = c;
    }
  });
  const char* name = reflector == AlignmentReflector::kTied      ? "alignment/tied"
                     : reflector == AlignmentReflector::kNegated ? "alignment/negated"
                                                                 : "alignment/random-U";
  const double lo = *std::min_element(cosines.begin(), cosines.end());
  return summarize(name, cosines, kAlignmentFloor, seed, lo >= kAlignmentFloor);
}

const char* to_string(EquivalenceFamily f) {
  switch (f) {
    case EquivalenceFamily::kOrthogonal: return "orthogonal";
    case EquivalenceFamily::kInvertible: return "invertible";
    case EquivalenceFamily::kScaling: return "scaling";
  }
  return "?";
}

double tied_equivalence_gap(const DenseMatrix& V, const DenseMatrix& B, const SparseVector& r,
                            double alpha) {
  const DenseMatrix BV = multiply(B, V);
  const DenseVector a = scaled(transposed_mat_vec(V, mat_vec(V, r)), alpha, r);
  const DenseVector b = scaled(transposed_mat_vec(BV, mat_vec(BV, r)), alpha, r);
  return relative_inf_diff(a.span(), b.span());
}

double independent_equivalence_gap(const DenseMatrix& U, const DenseMatrix& V, const DenseMatrix& B,
                                   const SparseVector& r, double alpha) {
  const DenseMatrix UBinv = multiply(U, inverse(B));
  const DenseMatrix BV = multiply(B, V);
  const DenseVector a = scaled(mat_vec(U, mat_vec(V, r)), alpha, r);
  const DenseVector b = scaled(mat_vec(UBinv, mat_vec(BV, r)), alpha, r);
  return relative_inf_diff(a.span(), b.span());
}

double condition_number_l1(const DenseMatrix& B) {
  auto norm1 = [](const DenseMatrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
      best = std::max(best, s);
    }
    return best;
  };
  try {
    return norm1(B) * norm1(inverse(B));
  } catch (const DimensionError&) {
    return std::numeric_limits<double>::infinity();
  }
}

TrialReport equivalence_check(std::size_t n, std::size_t hidden_dim, std::size_t trials,
                              std::uint64_t seed, EquivalenceFamily family) {
  require_trials(trials);
  if (n == 0 || hidden_dim == 0) throw DimensionError("equivalence_check: empty dimensions");
  constexpr double kAlpha = 20.0;
  std::vector<double> gaps(trials);
  parallel_for(0, trials, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      Rng rng(derive_seed(seed, t));
      const DenseMatrix V = gaussian(hidden_dim, n, rng);
      const SparseVector r = random_ratings(n, 0.3, rng);
      switch (family) {
        case EquivalenceFamily::kOrthogonal: {
          const DenseMatrix B = random_orthogonal(hidden_dim, rng());
          gaps[t] = tied_equivalence_gap(V, B, r, kAlpha);
          break;
        }
        case EquivalenceFamily::kInvertible: {
          const DenseMatrix U = gaussian(n, hidden_dim, rng);
          DenseMatrix B = gaussian(hidden_dim, hidden_dim, rng);
          while (condition_number_l1(B) > kMaxCondition) B = gaussian(hidden_dim, hidden_dim, rng);
          gaps[t] = independent_equivalence_gap(U, V, B, r, kAlpha);
          break;
        }
        case EquivalenceFamily::kScaling: {
          DenseMatrix B(hidden_dim, hidden_dim);
          for (std::size_t a = 0; a < hidden_dim; ++a) B(a, a) = uniform_in(rng, 0.25, 4.0);
          B(0, 0) = 2.0;
          gaps[t] = tied_equivalence_gap(V, B, r, kAlpha);
          break;
        }
      }
    }
  });
  const double hi = *std::max_element(gaps.begin(), gaps.end());
  return summarize(std::string("equivalence/") + to_string(family), gaps, kEquivalenceTol, seed,
                   hi <= kEquivalenceTol);
}

double max_gradient_error(const ModelParams& p, const HyperParams& h,
                          const std::vector<SparseVector>& batch, double step) {
  LossBreakdown at;
  const ModelParams g = compute_gradients(p, h, batch, &at);
  const double floor = 1e-6 * std::max(1.0, std::abs(at.total));
  ModelParams probe = p;
  auto pt = probe.tensors();
  const auto gt = g.tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < pt.size(); ++t) {
    for (std::size_t i = 0; i < pt[t].size(); ++i) {
      const double keep = pt[t][i];
      pt[t][i] = keep + step;
      const double up = compute_loss(probe, h, batch).total;
      pt[t][i] = keep - step;
      const double down = compute_loss(probe, h, batch).total;
      pt[t][i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = gt[t][i];
      const double denom = std::max({floor, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

TrialReport finite_diff_check(ReflectionMode mode, bool residual, std::size_t n,
                              std::size_t hidden_dim, std::size_t trials, std::uint64_t seed) {
  require_trials(trials);
  if (n < 2 || n > 12 || hidden_dim == 0 || hidden_dim > 8) {
    throw DimensionError("finite_diff_check: needs 2 <= N <= 12 and 1 <= d_p <= 8");
  }
  std::vector<double> errors(trials);
  parallel_for(0, trials, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      Rng rng(derive_seed(seed, t));
      HyperParams h;
      h.hidden_dim = hidden_dim;
      h.residual = residual;
      h.decay = static_cast<DecayKind>(uniform_index(rng, 4));
      h.alpha = uniform_in(rng, 0.2, 2.0);
      h.lambda1 = uniform_in(rng, 0.01, 0.3);
      h.lambda2 = uniform_in(rng, 0.01, 0.3);
      h.lambda3 = uniform_in(rng, 0.01, 0.3);
      h.lambda4 = uniform_in(rng, 0.01, 0.3);

      ModelParams p = init_params(mode, n, hidden_dim, rng());
      for (double& v : p.V.flat()) v = 0.2 * standard_normal(rng);
      for (double& v : p.W.flat()) v = 0.2 * standard_normal(rng);
      for (double& v : p.U.flat()) v = 0.2 * standard_normal(rng);
      for (double& v : p.c.values()) v = 0.1 * standard_normal(rng);
      for (double& v : p.b.values()) v = 0.1 * standard_normal(rng);
      if (mode == ReflectionMode::kImplicit) {
        p.T = gram_rows(p.V);
        for (double& v : p.T.flat()) v += 0.05 * standard_normal(rng);
      }

      std::vector<SparseVector> batch;
      const std::size_t size = 1 + uniform_index(rng, 3);
      for (std::size_t k = 0; k < size; ++k) batch.push_back(random_ratings(n, 0.5, rng).scaled(0.2));
      errors[t] = max_gradient_error(p, h, batch);
    }
  });
  const double hi = *std::max_element(errors.begin(), errors.end());
  std::string name = std::string("gradient/") + to_string(mode) + (residual ? "+residual" : "");
  return summarize(std::move(name), errors, kGradientTol, seed, hi < kGradientTol);
}

void export_latent(std::ostream& out, const ModelParams& p, const HyperParams& h,
                   const InteractionMatrix& m, std::span<const std::size_t> indices,
                   const std::vector<DenseVector>* dense_inputs) {
  const Orientation o = h.orientation;
  const std::size_t count = m.vector_count(o);
  for (std::size_t idx : indices) {
    if (idx >= count) {
      throw DimensionError("export_latent: vector index " + std::to_string(idx) + " out of range (" +
                           std::to_string(count) + " vectors)");
    }
  }
  const IdIndex& ids = o == Orientation::kItem ? m.items() : m.users();
  out << "id,count";
  for (std::size_t a = 0; a < p.hidden_dim(); ++a) out << ",h" << a;
  out << '\n';
  EncoderState st;
  char buf[32];
  for (std::size_t idx : indices) {
    const SparseVector& r = m.interaction_vector(idx, o);
    encode(p, h, r, dense_inputs != nullptr ? &(*dense_inputs)[idx] : nullptr, st);
    out << ids.raw(idx) << ',' << r.nnz();
    for (double v : st.h.span()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void export_latent(const std::string& path, const ModelParams& p, const HyperParams& h,
                   const InteractionMatrix& m, std::span<const std::size_t> indices,
                   const std::vector<DenseVector>* dense_inputs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  export_latent(out, p, h, m, indices, dense_inputs);
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace cranet
