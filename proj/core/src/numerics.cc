#include "cranet/numerics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "cranet/errors.h"
#include "cranet/parallel.h"
#include "cranet/random.h"

namespace cranet {
namespace {

void require(bool ok, const char* what, std::size_t a, std::size_t b) {
  if (!ok) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMajor, Eigen::Unaligned, Eigen::OuterStride<>>;
using ConstMap = Eigen::Map<const RowMajor>;

constexpr std::size_t kRowBlock = 32;

// Block boundaries do not depend on the thread count.
void for_row_blocks(std::size_t rows, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t blocks = (rows + kRowBlock - 1) / kRowBlock;
  parallel_for(0, blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) body(b * kRowBlock, std::min(rows, (b + 1) * kRowBlock));
  }, 1);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows_ * cols_, "DenseMatrix value count", values_.size(),
          rows_ * cols_);
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "DenseMatrix ragged row", r.size(), cols_);
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SparseVector::SparseVector(std::size_t dim, std::vector<SparseEntry> entries)
    : dim_(dim), entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.index >= dim_) {
      throw DimensionError("SparseVector index " + std::to_string(e.index) +
                           " out of range for dim " + std::to_string(dim_));
    }
    if (k > 0 && entries_[k - 1].index >= e.index) {
      throw DimensionError("SparseVector indices must be strictly increasing");
    }
    if (!std::isfinite(e.value) || e.value == 0.0) {
      throw DimensionError("SparseVector values must be finite and non-zero");
    }
  }
}

DenseVector SparseVector::to_dense() const {
  DenseVector out(dim_);
  for (const auto& e : entries_) out[e.index] = e.value;
  return out;
}

SparseVector SparseVector::scaled(double factor) const {
  SparseVector out = *this;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x) {
  require(a.cols() == x.dim(), "mat_vec", a.cols(), x.dim());
  DenseVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + i * a.cols();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += row[k] * x[k];
    out[i] = acc;
  }
  return out;
}

DenseVector mat_vec(const DenseMatrix& a, const SparseVector& x) {
  require(a.cols() == x.dim(), "mat_vec", a.cols(), x.dim());
  DenseVector out(a.rows());
  const auto entries = x.entries();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + i * a.cols();
    double acc = 0.0;
    for (const auto& e : entries) acc += row[e.index] * e.value;
    out[i] = acc;
  }
  return out;
}

DenseVector transposed_mat_vec(const DenseMatrix& a, const DenseVector& x) {
  require(a.rows() == x.dim(), "transposed_mat_vec", a.rows(), x.dim());
  DenseVector out(a.cols());
  double* o = out.data();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + i * a.cols();
    const double xi = x[i];
    for (std::size_t k = 0; k < a.cols(); ++k) o[k] += row[k] * xi;
  }
  return out;
}

DenseMatrix outer_product(const DenseVector& u, const DenseVector& v) {
  DenseMatrix out(u.dim(), v.dim());
  for (std::size_t i = 0; i < u.dim(); ++i) {
    double* row = out.data() + i * v.dim();
    for (std::size_t j = 0; j < v.dim(); ++j) row[j] = u[i] * v[j];
  }
  return out;
}

double sigmoid(double x) {
  // Evaluated on the side that cannot overflow.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

DenseVector sigmoid_map(const DenseVector& x) {
  DenseVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

double squared_frobenius_norm(const DenseMatrix& a) {
  double acc = 0.0;
  for (double v : a.flat()) acc += v * v;
  return acc;
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(squared_frobenius_norm(a)); }

DenseMatrix random_orthogonal(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  // Columns of `q` are built in place; stored transposed so each column is a
  // contiguous row.
  DenseMatrix cols(d, d);
  for (double& v : cols.flat()) v = standard_normal(rng);
  for (std::size_t j = 0; j < d; ++j) {
    auto cj = cols.row(j);
    // Two passes of classical Gram-Schmidt keep the loss of orthogonality at
    // the rounding level.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        const auto cp = cols.row(p);
        const double proj = dot(cp, cj);
        for (std::size_t k = 0; k < d; ++k) cj[k] -= proj * cp[k];
      }
    }
    const double n = norm2(cj);
    if (n == 0.0) throw DimensionError("random_orthogonal: degenerate draw");
    for (double& v : cj) v /= n;
  }
  return transpose(cols);
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "multiply", a.cols(), b.rows());
  DenseMatrix out(a.rows(), b.cols());
  if (out.size() == 0 || a.cols() == 0) return out;
  const ConstMap bm(b.data(), b.rows(), b.cols());
  for_row_blocks(a.rows(), [&](std::size_t lo, std::size_t hi) {
    const ConstMap ab(a.data() + lo * a.cols(), hi - lo, a.cols());
    Map ob(out.data() + lo * out.cols(), hi - lo, out.cols(), Eigen::OuterStride<>(static_cast<Eigen::Index>(out.cols())));
    ob.noalias() = ab * bm;
  });
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "subtract", a.size(), b.size());
  DenseMatrix out = a;
  auto o = out.flat();
  const auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bb[i];
  return out;
}

DenseMatrix gram_rows(const DenseMatrix& a) {
  const std::size_t r = a.rows();
  DenseMatrix out(r, r);
  if (r == 0 || a.cols() == 0) return out;
  const ConstMap am(a.data(), r, a.cols());
  for_row_blocks(r, [&](std::size_t lo, std::size_t hi) {
    const ConstMap ab(a.data() + lo * a.cols(), hi - lo, a.cols());
    Map ob(out.data() + lo * r + lo, hi - lo, r - lo, Eigen::OuterStride<>(static_cast<Eigen::Index>(r)));
    ob.noalias() = ab * am.bottomRows(static_cast<Eigen::Index>(r - lo)).transpose();
  });
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

DenseMatrix inverse(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "inverse of non-square", a.rows(), a.cols());
  const std::size_t n = a.rows();
  DenseMatrix work = a;
  DenseMatrix inv = DenseMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    if (work(pivot, col) == 0.0) throw DimensionError("inverse: singular matrix");
    if (pivot != col) {
      std::swap_ranges(work.row(col).begin(), work.row(col).end(), work.row(pivot).begin());
      std::swap_ranges(inv.row(col).begin(), inv.row(col).end(), inv.row(pivot).begin());
    }
    const double p = work(col, col);
    for (auto& v : work.row(col)) v /= p;
    for (auto& v : inv.row(col)) v /= p;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        work(r, k) -= f * work(col, k);
        inv(r, k) -= f * inv(col, k);
      }
    }
  }
  return inv;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot", a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "max_abs_diff", a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative_inf_diff(std::span<const double> a, std::span<const double> b) {
  return max_abs_diff(a, b) / std::max(1e-12, max_abs(a));
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace cranet
