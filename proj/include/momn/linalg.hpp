#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "momn/matrix.hpp"

namespace momn {

/// n x c matrix of local descriptors (n spatial positions, c channels).
class FeatureMap {
 public:
  explicit FeatureMap(Matrix mat);

  const Matrix& mat() const noexcept { return mat_; }
  std::size_t n() const noexcept { return mat_.rows(); }
  std::size_t c() const noexcept { return mat_.cols(); }

 private:
  Matrix mat_;
};

/// Symmetric PSD c x c covariance plus the trace it had before any scaling.
struct CovMatrix {
  Matrix a;
  double trace_pre = 0.0;

  std::size_t c() const noexcept { return a.rows(); }
};

/// Upper-triangular entries of a symmetric c x c matrix, length c(c+1)/2.
struct Descriptor {
  std::vector<double> values;

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

enum class CompensationMode {
  TraceOfInput,   // sqrt(tr A) * Y, recovers A^{1/2} from the root of A/tr(A)
  TraceOfOutput,  // sqrt(tr Y) * Y, the literal layer formula
  None,
};

struct Norms {
  double frobenius = 0.0;
  double l1 = 0.0;
  std::optional<double> trace;
};

CovMatrix build_covariance(const FeatureMap& x);

/// Wraps an already-formed covariance; checks symmetry and finiteness.
CovMatrix make_covariance(Matrix a);

inline constexpr double kDegenerateTrace = 1e-12;

CovMatrix pre_normalize(const CovMatrix& a);

Matrix post_compensate(const Matrix& y, double trace_pre, CompensationMode mode);

Descriptor upper_triangular(const Matrix& y);

/// Inverse of upper_triangular for symmetric matrices.
Matrix from_upper_triangular(const Descriptor& d);

Norms norms(const Matrix& m);

/// Jitter suggested for rank-deficient covariances: 1e-6 / c.
inline double default_jitter(std::size_t c) { return 1e-6 / static_cast<double>(c); }

}  // namespace momn
