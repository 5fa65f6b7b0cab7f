#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "momn/error.hpp"

namespace momn {

// Dense row-major matrix of doubles. Every matrix symbol of the solver
// (X, A, Y, Z, J1, J2, L1, L2, S) lives in one of these.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diag(std::span<const double> d);
  static Matrix diag(std::initializer_list<double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_finite(const Matrix& m, const char* what);
void require_square(const Matrix& m, const char* what);
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

// Elementwise and algebraic primitives. These are the only arithmetic the
// solver and the gradient tape use, so both paths round identically.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
// a + s*I
Matrix add_identity(const Matrix& a, double s);
// alpha*a + beta, elementwise
Matrix affine(const Matrix& a, double alpha, double beta);
// sgn with sgn(0) = 0
Matrix sgn(const Matrix& a);
Matrix logistic(const Matrix& a);
Matrix relu(const Matrix& a);
// Column means of an n x c matrix, as 1 x c.
Matrix mean_rows(const Matrix& a);
// Repeat a 1 x c row n times.
Matrix broadcast_rows(const Matrix& row, std::size_t n);
// Row-major entries with column >= row, as 1 x c(c+1)/2.
Matrix upper_tri_row(const Matrix& a);

double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double l1_norm(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

// (M + M^T)/2; bit-equal for already-symmetric input.
Matrix symmetrize(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol);

// Scalar overloads so pipeline templates can treat traces uniformly.
inline double scale_by(double a, double s) { return a * s; }
Matrix scale_by(const Matrix& a, double s);
double sqrt_scalar(double s);
double reciprocal(double s);
inline double detach(double s) { return s; }
inline Matrix detach(const Matrix& m) { return m; }

}  // namespace momn
