#include "momn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace momn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Input: return "input-error";
    case ErrorKind::Dimension: return "dimension-error";
    case ErrorKind::DegenerateInput: return "degenerate-input-error";
    case ErrorKind::Numeric: return "numeric-error";
    case ErrorKind::Parameter: return "parameter-error";
    case ErrorKind::Precondition: return "precondition-error";
    case ErrorKind::Configuration: return "configuration-error";
    case ErrorKind::NotPsd: return "not-psd-error";
    case ErrorKind::Io: return "io-error";
  }
  return "error";
}

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Matrix zip(const Matrix& a, const Matrix& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Matrix out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::Dimension, "matrix data length " + std::to_string(data_.size()) +
                                          " does not match " + std::to_string(rows_) + "x" +
                                          std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::Dimension, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::diag(std::initializer_list<double> d) {
  return diag(std::span<const double>(d.begin(), d.size()));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw Error(ErrorKind::Input, std::string(what) + " has non-finite entries");
}

void require_square(const Matrix& m, const char* what) {
  if (!m.is_square()) {
    throw Error(ErrorKind::Dimension, std::string(what) + " must be square, got " + shape(m));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::Dimension,
                std::string(what) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::Dimension, "matmul: " + shape(a) + " times " + shape(b));
  }
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const std::size_t p = b.cols();
  Matrix out(n, p);
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = out.data().data();
  // i-k-j order keeps the inner loop contiguous in both B and C.
  constexpr std::size_t kBlock = 64;
  for (std::size_t k0 = 0; k0 < m; k0 += kBlock) {
    const std::size_t k1 = std::min(m, k0 + kBlock);
    for (std::size_t i = 0; i < n; ++i) {
      double* __restrict crow = C + i * p;
      for (std::size_t k = k0; k < k1; ++k) {
        const double aik = A[i * m + k];
        const double* __restrict brow = B + k * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix scale(const Matrix& a, double s) {
  return map(a, [s](double x) { return s * x; });
}

Matrix scale_by(const Matrix& a, double s) { return scale(a, s); }

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add_identity(const Matrix& a, double s) {
  require_square(a, "add_identity");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) out(i, i) += s;
  return out;
}

Matrix affine(const Matrix& a, double alpha, double beta) {
  return map(a, [alpha, beta](double x) { return alpha * x + beta; });
}

Matrix sgn(const Matrix& a) {
  return map(a, [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Matrix logistic(const Matrix& a) {
  return map(a, [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Matrix relu(const Matrix& a) {
  return map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Matrix mean_rows(const Matrix& a) {
  if (a.rows() == 0) throw Error(ErrorKind::Dimension, "mean_rows of an empty matrix");
  Matrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
  const double inv = 1.0 / static_cast<double>(a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) *= inv;
  return out;
}

Matrix broadcast_rows(const Matrix& row, std::size_t n) {
  if (row.rows() != 1) throw Error(ErrorKind::Dimension, "broadcast_rows expects a 1 x c row");
  Matrix out(n, row.cols());
  for (std::size_t i = 0; i < n; ++i) std::copy(row.data().begin(), row.data().end(), out.row(i).begin());
  return out;
}

Matrix upper_tri_row(const Matrix& a) {
  require_square(a, "upper_triangular");
  const std::size_t c = a.rows();
  Matrix out(1, c * (c + 1) / 2);
  std::size_t k = 0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i; j < c; ++j) out(0, k++) = a(i, j);
  return out;
}

double trace(const Matrix& a) {
  require_square(a, "trace");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double l1_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += std::abs(v);
  return s;
}

double dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

Matrix symmetrize(const Matrix& m) {
  require_square(m, "symmetrize");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (!m.is_square()) return false;
  const double bound = rel_tol * std::max(max_abs(m), 1e-300);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > bound) return false;
  return true;
}

double sqrt_scalar(double s) {
  if (!(s >= 0.0)) throw Error(ErrorKind::Numeric, "square root of negative trace " + std::to_string(s));
  return std::sqrt(s);
}

double reciprocal(double s) {
  if (s == 0.0) throw Error(ErrorKind::Numeric, "reciprocal of zero");
  return 1.0 / s;
}

}  // namespace momn
