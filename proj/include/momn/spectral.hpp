#pragma once

#include <cstddef>
#include <vector>

#include "momn/matrix.hpp"

// Eigendecomposition-based reference routines. Slow (O(c^3) per sweep) but
// independent of the multiplication-only solver they are used to check.

namespace momn::spectral {

struct EigDecomp {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // columns, orthonormal
};

inline constexpr int kMaxSweeps = 100;
inline constexpr double kSymmetryTol = 1e-8;

/// Cyclic-by-row Jacobi. Stops when the off-diagonal Frobenius norm drops
/// below 1e-12 * ||S||_F.
EigDecomp jacobi_eig(const Matrix& s);

std::vector<double> eigenvalues(const Matrix& s);

/// V diag(f(lambda)) V^T
Matrix reconstruct(const EigDecomp& e, const std::vector<double>& values);

Matrix spectral_sqrt(const Matrix& a);
Matrix soft_threshold(const Matrix& m, double lam);
Matrix singular_value_threshold(const Matrix& m, double lam);

/// Number of eigenvalues strictly greater than tau.
int approx_rank(const Matrix& y, double tau);

/// Sum of singular values of a symmetric matrix (= sum |lambda|).
double nuclear_norm(const Matrix& y);

}  // namespace momn::spectral
