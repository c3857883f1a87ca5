#pragma once

// Small dense/sparse linear-algebra kernel. Everything is double precision and
// every reduction accumulates in ascending index order, so results are
// reproducible bit-for-bit across runs and thread counts.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace cranet {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {}
  DenseVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<double> values_;
};

// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct SparseEntry {
  std::size_t index = 0;
  double value = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

// A vector with only its observed coordinates stored. An index counts as
// observed iff it is present; stored values are finite and non-zero.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}
  // Throws DimensionError unless indices are strictly increasing and < dim
  // and values are finite and non-zero.
  SparseVector(std::size_t dim, std::vector<SparseEntry> entries);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const SparseEntry> entries() const { return entries_; }

  DenseVector to_dense() const;
  // Observed values scaled by `factor`; the pattern is unchanged.
  SparseVector scaled(double factor) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<SparseEntry> entries_;
};

DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x);
DenseVector mat_vec(const DenseMatrix& a, const SparseVector& x);
DenseVector transposed_mat_vec(const DenseMatrix& a, const DenseVector& x);
DenseMatrix outer_product(const DenseVector& u, const DenseVector& v);
DenseVector sigmoid_map(const DenseVector& x);
double sigmoid(double x);
double frobenius_norm(const DenseMatrix& a);
double squared_frobenius_norm(const DenseMatrix& a);

// Q from the Gram-Schmidt orthonormalisation of a seeded standard-normal
// matrix. Equivalent to the QR factor with a non-negative triangular
// diagonal, which makes the output unique for a given draw.
DenseMatrix random_orthogonal(std::size_t d, std::uint64_t seed);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
// a·aᵀ, row-parallel; entry (i,j) accumulates over columns in ascending order.
DenseMatrix gram_rows(const DenseMatrix& a);
// Gauss-Jordan with partial pivoting. Throws DimensionError when singular.
DenseMatrix inverse(const DenseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
// ‖a-b‖∞ / max(1e-12, ‖a‖∞).
double relative_inf_diff(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

}  // namespace cranet
