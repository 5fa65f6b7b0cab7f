#include "momn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace momn::spectral {

namespace {

void require_symmetric(const Matrix& s, const char* what) {
  require_square(s, what);
  require_finite(s, what);
  if (!is_symmetric(s, kSymmetryTol)) {
    throw Error(ErrorKind::Input, std::string(what) + ": matrix is not symmetric");
  }
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Zeroes a(p,q) with a two-sided rotation, accumulating it into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigDecomp jacobi_eig(const Matrix& s) {
  require_symmetric(s, "jacobi_eig");
  const std::size_t n = s.rows();
  Matrix a = symmetrize(s);
  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * frobenius_norm(s);

  bool converged = off_diagonal_norm(a) <= target;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
    converged = off_diagonal_norm(a) <= target;
  }
  if (!converged) {
    throw Error(ErrorKind::Numeric,
                "Jacobi did not converge in " + std::to_string(kMaxSweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigDecomp out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

std::vector<double> eigenvalues(const Matrix& s) { return jacobi_eig(s).eigenvalues; }

Matrix reconstruct(const EigDecomp& e, const std::vector<double>& values) {
  const std::size_t n = e.eigenvectors.rows();
  Matrix scaled = e.eigenvectors;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) scaled(r, k) *= values[k];
  return symmetrize(matmul(scaled, transpose(e.eigenvectors)));
}

Matrix spectral_sqrt(const Matrix& a) {
  EigDecomp e = jacobi_eig(a);
  const double scale_ref = std::max(1.0, e.eigenvalues.empty() ? 0.0 : std::abs(e.eigenvalues.front()));
  std::vector<double> roots(e.eigenvalues.size());
  for (std::size_t k = 0; k < roots.size(); ++k) {
    const double lambda = e.eigenvalues[k];
    if (lambda < -1e-6 * scale_ref) {
      throw Error(ErrorKind::NotPsd, "eigenvalue " + std::to_string(lambda) + " is negative");
    }
    roots[k] = std::sqrt(std::max(lambda, 0.0));
  }
  return reconstruct(e, roots);
}

Matrix soft_threshold(const Matrix& m, double lam) {
  if (!(lam >= 0.0)) throw Error(ErrorKind::Parameter, "soft_threshold needs lam >= 0");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = m.data()[i];
    const double mag = std::max(std::abs(x) - lam, 0.0);
    out.data()[i] = x > 0.0 ? mag : (x < 0.0 ? -mag : 0.0);
  }
  return out;
}

Matrix singular_value_threshold(const Matrix& m, double lam) {
  if (!(lam >= 0.0)) throw Error(ErrorKind::Parameter, "singular_value_threshold needs lam >= 0");
  EigDecomp e = jacobi_eig(m);
  std::vector<double> shrunk(e.eigenvalues.size());
  for (std::size_t k = 0; k < shrunk.size(); ++k) shrunk[k] = std::max(e.eigenvalues[k] - lam, 0.0);
  return reconstruct(e, shrunk);
}

int approx_rank(const Matrix& y, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorKind::Parameter, "approx_rank needs tau >= 0");
  const auto ev = eigenvalues(y);
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [tau](double l) { return l > tau; }));
}

double nuclear_norm(const Matrix& y) {
  double s = 0.0;
  for (double l : eigenvalues(y)) s += std::abs(l);
  return s;
}

}  // namespace momn::spectral
