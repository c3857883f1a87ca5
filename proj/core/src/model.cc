#include "cranet/model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "cranet/encoder.h"
#include "cranet/errors.h"
#include "cranet/parallel.h"
#include "cranet/random.h"

namespace cranet {

const char* to_string(ReflectionMode m) {
  switch (m) {
    case ReflectionMode::kTied: return "tied";
    case ReflectionMode::kIndependent: return "independent";
    case ReflectionMode::kImplicit: return "implicit";
    case ReflectionMode::kPlain: return "plain";
  }
  return "?";
}

const char* to_string(DecayKind k) {
  switch (k) {
    case DecayKind::kPhi1: return "phi1";
    case DecayKind::kPhi2: return "phi2";
    case DecayKind::kPhi3: return "phi3";
    case DecayKind::kPhi4: return "phi4";
  }
  return "?";
}

const char* to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

ReflectionMode reflection_mode_from_string(const std::string& s) {
  if (s == "tied") return ReflectionMode::kTied;
  if (s == "independent") return ReflectionMode::kIndependent;
  if (s == "implicit") return ReflectionMode::kImplicit;
  if (s == "plain") return ReflectionMode::kPlain;
  throw ConfigError("mode must be tied, independent, implicit or plain; got '" + s + "'");
}

DecayKind decay_kind_from_string(const std::string& s) {
  if (s == "phi1") return DecayKind::kPhi1;
  if (s == "phi2") return DecayKind::kPhi2;
  if (s == "phi3") return DecayKind::kPhi3;
  if (s == "phi4") return DecayKind::kPhi4;
  throw ConfigError("decay must be phi1..phi4; got '" + s + "'");
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("optimizer must be adam or sgd; got '" + s + "'");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + key + "' expects a real number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects on/off, got '" + v + "'");
}

}  // namespace

const std::vector<std::string>& hyper_param_keys() {
  static const std::vector<std::string> keys = {
      "dp", "alpha", "decay", "lambda1", "lambda2", "lambda3", "lambda4", "lr", "batch",
      "epochs", "patience", "residual", "orientation", "seed", "clip", "optimizer"};
  return keys;
}

std::vector<std::pair<std::string, std::string>> to_key_values(const HyperParams& h) {
  return {
      {"dp", std::to_string(h.hidden_dim)},
      {"alpha", format_double(h.alpha)},
      {"decay", to_string(h.decay)},
      {"lambda1", format_double(h.lambda1)},
      {"lambda2", format_double(h.lambda2)},
      {"lambda3", format_double(h.lambda3)},
      {"lambda4", format_double(h.lambda4)},
      {"lr", format_double(h.learning_rate)},
      {"batch", std::to_string(h.batch_size)},
      {"epochs", std::to_string(h.max_epochs)},
      {"patience", std::to_string(h.patience)},
      {"residual", h.residual ? "on" : "off"},
      {"orientation", to_string(h.orientation)},
      {"seed", std::to_string(h.seed)},
      {"clip", h.clip_predictions ? "on" : "off"},
      {"optimizer", to_string(h.optimizer)},
  };
}

bool set_hyper_param(HyperParams& h, const std::string& key, const std::string& value) {
  if (key == "dp") {
    h.hidden_dim = parse_count(key, value);
  } else if (key == "alpha") {
    h.alpha = parse_double(key, value);
    if (h.alpha <= 0.0) throw ConfigError("alpha must be positive");
  } else if (key == "decay") {
    h.decay = decay_kind_from_string(value);
  } else if (key == "lambda1" || key == "lambda2" || key == "lambda3" || key == "lambda4") {
    const double v = parse_double(key, value);
    if (v < 0.0) throw ConfigError("key '" + key + "' must be non-negative");
    (key == "lambda1" ? h.lambda1 : key == "lambda2" ? h.lambda2 : key == "lambda3" ? h.lambda3 : h.lambda4) = v;
  } else if (key == "lr") {
    h.learning_rate = parse_double(key, value);
  } else if (key == "batch") {
    h.batch_size = parse_count(key, value);
    if (h.batch_size == 0) throw ConfigError("batch must be at least 1");
  } else if (key == "epochs") {
    h.max_epochs = parse_count(key, value);
  } else if (key == "patience") {
    h.patience = parse_count(key, value);
  } else if (key == "residual") {
    h.residual = parse_switch(key, value);
  } else if (key == "orientation") {
    h.orientation = orientation_from_string(value);
  } else if (key == "seed") {
    h.seed = parse_count(key, value);
  } else if (key == "clip") {
    h.clip_predictions = parse_switch(key, value);
  } else if (key == "optimizer") {
    h.optimizer = optimizer_from_string(value);
  } else {
    return false;
  }
  return true;
}

void ModelParams::validate() const {
  const std::size_t n = W.rows(), d = V.rows();
  auto fail = [](const std::string& what) { throw DimensionError("ModelParams: " + what); };
  if (V.cols() != n) fail("V is not d_p x N");
  if (W.cols() != d) fail("W is not N x d_p");
  if (c.dim() != d) fail("c has wrong length");
  if (b.dim() != n) fail("b has wrong length");
  const bool has_t = T.size() > 0, has_u = U.size() > 0;
  switch (mode) {
    case ReflectionMode::kImplicit:
      if (T.rows() != d || T.cols() != d || has_u) fail("implicit mode needs exactly T (d_p x d_p)");
      break;
    case ReflectionMode::kIndependent:
      if (U.rows() != n || U.cols() != d || has_t) fail("independent mode needs exactly U (N x d_p)");
      break;
    case ReflectionMode::kTied:
    case ReflectionMode::kPlain:
      if (has_t || has_u) fail("tied/plain mode carries no extra matrix");
      break;
  }
}

std::vector<std::span<double>> ModelParams::tensors() {
  std::vector<std::span<double>> out{V.flat(), W.flat()};
  if (mode == ReflectionMode::kImplicit) out.push_back(T.flat());
  if (mode == ReflectionMode::kIndependent) out.push_back(U.flat());
  out.push_back(c.span());
  out.push_back(b.span());
  return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  std::vector<std::span<const double>> out{V.flat(), W.flat()};
  if (mode == ReflectionMode::kImplicit) out.push_back(T.flat());
  if (mode == ReflectionMode::kIndependent) out.push_back(U.flat());
  out.push_back(c.span());
  out.push_back(b.span());
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out{"V", "W"};
  if (mode == ReflectionMode::kImplicit) out.push_back("T");
  if (mode == ReflectionMode::kIndependent) out.push_back("U");
  out.push_back("c");
  out.push_back("b");
  return out;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.mode = p.mode;
  z.V = DenseMatrix(p.V.rows(), p.V.cols());
  z.W = DenseMatrix(p.W.rows(), p.W.cols());
  z.T = DenseMatrix(p.T.rows(), p.T.cols());
  z.U = DenseMatrix(p.U.rows(), p.U.cols());
  z.c = DenseVector(p.c.dim());
  z.b = DenseVector(p.b.dim());
  return z;
}

double decay(DecayKind kind, double alpha, std::size_t nnz) {
  if (nnz == 0) return 0.0;
  const double n = static_cast<double>(nnz);
  switch (kind) {
    case DecayKind::kPhi1: return alpha / n;
    case DecayKind::kPhi2: return alpha * std::log(n + 1.0) / n;
    case DecayKind::kPhi3: return alpha / std::sqrt(n);
    case DecayKind::kPhi4: return alpha;
  }
  return 0.0;
}

namespace {

void check_input(const ModelParams& p, const SparseVector& r) {
  if (r.dim() != p.input_dim()) {
    throw DimensionError("interaction vector has dim " + std::to_string(r.dim()) +
                         ", model expects " + std::to_string(p.input_dim()));
  }
}

// out = V·r over the stored entries only.
void project_sparse(const DenseMatrix& v, const SparseVector& r, DenseVector& out) {
  out = DenseVector(v.rows());
  const auto entries = r.entries();
  for (std::size_t a = 0; a < v.rows(); ++a) {
    const double* row = v.data() + a * v.cols();
    double acc = 0.0;
    for (const auto& e : entries) acc += row[e.index] * e.value;
    out[a] = acc;
  }
}

}  // namespace

void encode(const ModelParams& p, const HyperParams& hp, const SparseVector& r,
            const DenseVector* dense_input, EncoderState& st) {
  check_input(p, r);
  const std::size_t d = p.hidden_dim(), n = p.input_dim();
  st.dense = false;
  st.phi = p.mode == ReflectionMode::kPlain ? 0.0 : decay(hp.decay, hp.alpha, r.nnz());
  project_sparse(p.V, r, st.s);

  switch (p.mode) {
    case ReflectionMode::kPlain:
      if (dense_input != nullptr) {
        if (dense_input->dim() != n) throw DimensionError("dense input has wrong dimension");
        st.input = *dense_input;
        st.dense = true;
        st.z = mat_vec(p.V, st.input);
      } else {
        st.z = st.s;
      }
      break;
    case ReflectionMode::kImplicit: {
      st.z = st.s;
      const DenseVector t = mat_vec(p.T, st.s);
      for (std::size_t a = 0; a < d; ++a) st.z[a] += st.phi * t[a];
      break;
    }
    case ReflectionMode::kTied:
    case ReflectionMode::kIndependent: {
      st.reflected = p.mode == ReflectionMode::kTied ? transposed_mat_vec(p.V, st.s)
                                                     : mat_vec(p.U, st.s);
      for (double& v : st.reflected.values()) v *= st.phi;
      st.input = st.reflected;
      for (const auto& e : r.entries()) st.input[e.index] = e.value;
      st.dense = true;
      st.z = mat_vec(p.V, st.input);
      break;
    }
  }
  for (std::size_t a = 0; a < d; ++a) st.z[a] += p.c[a];
  st.h = sigmoid_map(st.z);
}

void backward_encoder(const ModelParams& p, const SparseVector& r, const EncoderState& st,
                      const DenseVector& delta_z, ModelParams& g) {
  const std::size_t d = p.hidden_dim(), n = p.input_dim();
  for (std::size_t a = 0; a < d; ++a) g.c[a] += delta_z[a];

  // Gradient reaching s = V·R; flows into the observed columns of V.
  DenseVector delta_s(d);
  switch (p.mode) {
    case ReflectionMode::kPlain:
      if (st.dense) {
        for (std::size_t a = 0; a < d; ++a) {
          double* gv = g.V.data() + a * n;
          const double da = delta_z[a];
          for (std::size_t i = 0; i < n; ++i) gv[i] += da * st.input[i];
        }
        return;
      }
      delta_s = delta_z;
      break;
    case ReflectionMode::kImplicit: {
      for (std::size_t a = 0; a < d; ++a) {
        double* gt = g.T.data() + a * d;
        const double da = st.phi * delta_z[a];
        for (std::size_t bcol = 0; bcol < d; ++bcol) gt[bcol] += da * st.s[bcol];
      }
      const DenseVector tt = transposed_mat_vec(p.T, delta_z);
      for (std::size_t a = 0; a < d; ++a) delta_s[a] = delta_z[a] + st.phi * tt[a];
      break;
    }
    case ReflectionMode::kTied:
    case ReflectionMode::kIndependent: {
      // z = V·R̃ + c, R̃ = R + o∘R̂.
      DenseVector delta_reflected = transposed_mat_vec(p.V, delta_z);
      for (const auto& e : r.entries()) delta_reflected[e.index] = 0.0;
      if (p.mode == ReflectionMode::kTied) {
        // R̂ = φ·Vᵀ·s adds φ·s·δR̂ᵀ to ∂V.
        for (std::size_t a = 0; a < d; ++a) {
          double* gv = g.V.data() + a * n;
          const double dz = delta_z[a], ps = st.phi * st.s[a];
          for (std::size_t i = 0; i < n; ++i) gv[i] += dz * st.input[i] + ps * delta_reflected[i];
        }
        delta_s = mat_vec(p.V, delta_reflected);
      } else {
        for (std::size_t a = 0; a < d; ++a) {
          double* gv = g.V.data() + a * n;
          const double dz = delta_z[a];
          for (std::size_t i = 0; i < n; ++i) gv[i] += dz * st.input[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double di = st.phi * delta_reflected[i];
          if (di == 0.0) continue;
          double* gu = g.U.data() + i * d;
          for (std::size_t a = 0; a < d; ++a) gu[a] += di * st.s[a];
        }
        delta_s = transposed_mat_vec(p.U, delta_reflected);
      }
      for (double& v : delta_s.values()) v *= st.phi;
      break;
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    double* gv = g.V.data() + a * n;
    const double ds = delta_s[a];
    for (const auto& e : r.entries()) gv[e.index] += ds * e.value;
  }
}

DenseVector reflect_impute(const ModelParams& p, const HyperParams& h, const SparseVector& r) {
  check_input(p, r);
  if (p.mode != ReflectionMode::kTied && p.mode != ReflectionMode::kIndependent) {
    throw DimensionError("reflect_impute needs tied or independent mode");
  }
  EncoderState st;
  encode(p, h, r, nullptr, st);
  return st.input;
}

namespace {

DenseVector decode_full(const ModelParams& p, const HyperParams& h, const SparseVector& r,
                        const EncoderState& st) {
  DenseVector y(p.input_dim());
  for (std::size_t i = 0; i < y.dim(); ++i) y[i] = decode_at(p, st.h.span(), i);
  if (h.residual) {
    for (const auto& e : r.entries()) y[e.index] += e.value;
  }
  return y;
}

}  // namespace

DenseVector forward(const ModelParams& p, const HyperParams& h, const SparseVector& r) {
  EncoderState st;
  encode(p, h, r, nullptr, st);
  return decode_full(p, h, r, st);
}

DenseVector forward_dense_input(const ModelParams& p, const HyperParams& h, const SparseVector& r,
                                const DenseVector& input) {
  if (p.mode != ReflectionMode::kPlain) throw DimensionError("dense input requires plain mode");
  EncoderState st;
  encode(p, h, r, &input, st);
  return decode_full(p, h, r, st);
}

DenseVector hidden_code(const ModelParams& p, const HyperParams& h, const SparseVector& r) {
  EncoderState st;
  encode(p, h, r, nullptr, st);
  return st.h;
}

DenseVector hidden_code_dense_input(const ModelParams& p, const DenseVector& input) {
  HyperParams h;
  EncoderState st;
  encode(p, h, SparseVector(p.input_dim()), &input, st);
  return st.h;
}

std::vector<DenseVector> neighbor_impute(const InteractionMatrix& m, Orientation o, std::size_t k) {
  if (k == 0) throw DimensionError("neighbor_impute: k must be at least 1");
  const Orientation other = o == Orientation::kItem ? Orientation::kUser : Orientation::kItem;
  const std::size_t count = m.vector_count(o), dim = m.vector_dim(o);
  std::vector<double> norms(count);
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (const auto& e : m.interaction_vector(j, o).entries()) acc += e.value * e.value;
    norms[j] = std::sqrt(acc);
  }

  std::vector<DenseVector> out(count);
  parallel_for(0, count, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> sim(count);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = lo; j < hi; ++j) {
      const auto& rj = m.interaction_vector(j, o);
      std::fill(sim.begin(), sim.end(), 0.0);
      for (const auto& e : rj.entries()) {
        for (const auto& f : m.interaction_vector(e.index, other).entries()) {
          sim[f.index] += e.value * f.value;
        }
      }
      for (std::size_t l = 0; l < count; ++l) {
        const double denom = norms[j] * norms[l];
        sim[l] = denom > 0.0 ? sim[l] / denom : 0.0;
      }
      DenseVector v = rj.to_dense();
      std::size_t next_observed = 0;
      const auto observed = rj.entries();
      for (std::size_t i = 0; i < dim; ++i) {
        if (next_observed < observed.size() && observed[next_observed].index == i) {
          ++next_observed;
          continue;
        }
        cand.clear();
        const auto& at_i = m.interaction_vector(i, other);
        for (const auto& f : at_i.entries()) {
          if (f.index != j && sim[f.index] > 0.0) cand.emplace_back(sim[f.index], f.index);
        }
        if (cand.empty()) continue;
        const std::size_t take = std::min(k, cand.size());
        // Higher similarity first, lower index on ties.
        std::partial_sort(cand.begin(), cand.begin() + take, cand.end(),
                          [](const auto& x, const auto& y) {
                            return x.first > y.first || (x.first == y.first && x.second < y.second);
                          });
        std::sort(cand.begin(), cand.begin() + take,
                  [](const auto& x, const auto& y) { return x.second < y.second; });
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < take; ++t) {
          const auto& obs = m.interaction_vector(cand[t].second, o).entries();
          const auto it = std::lower_bound(obs.begin(), obs.end(), i,
                                           [](const SparseEntry& e, std::size_t idx) { return e.index < idx; });
          num += cand[t].first * it->value;
          den += std::abs(cand[t].first);
        }
        v[i] = num / den;
      }
      out[j] = std::move(v);
    }
  });
  return out;
}

void damp_imputed(std::vector<DenseVector>& imputed, const InteractionMatrix& m, Orientation o,
                  double alpha) {
  for (std::size_t j = 0; j < imputed.size(); ++j) {
    const auto& rj = m.interaction_vector(j, o);
    const double phi = decay(DecayKind::kPhi1, alpha, rj.nnz());
    DenseVector& v = imputed[j];
    for (double& x : v.values()) x *= phi;
    for (const auto& e : rj.entries()) v[e.index] = e.value;
  }
}

std::size_t param_count(ReflectionMode mode, std::size_t n, std::size_t hidden_dim) {
  const std::size_t tied = 2 * n * hidden_dim + n + hidden_dim;
  switch (mode) {
    case ReflectionMode::kImplicit: return tied + hidden_dim * hidden_dim;
    case ReflectionMode::kIndependent: return tied + n * hidden_dim;
    case ReflectionMode::kTied:
    case ReflectionMode::kPlain: return tied;
  }
  return tied;
}

ModelParams init_params(ReflectionMode mode, std::size_t n, std::size_t hidden_dim,
                        std::uint64_t seed) {
  if (n == 0 || hidden_dim == 0) throw DimensionError("init_params: N and d_p must be >= 1");
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(n + hidden_dim));
  auto fill = [&](DenseMatrix& m) {
    for (double& v : m.flat()) v = uniform_in(rng, -bound, bound);
  };
  ModelParams p;
  p.mode = mode;
  p.V = DenseMatrix(hidden_dim, n);
  p.W = DenseMatrix(n, hidden_dim);
  fill(p.V);
  fill(p.W);
  if (mode == ReflectionMode::kIndependent) {
    p.U = DenseMatrix(n, hidden_dim);
    fill(p.U);
  }
  if (mode == ReflectionMode::kImplicit) p.T = gram_rows(p.V);
  p.c = DenseVector(hidden_dim);
  p.b = DenseVector(n);
  return p;
}

}  // namespace cranet
