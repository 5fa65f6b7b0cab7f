#include "momn/linalg.hpp"

#include <cmath>
#include <string>

#include "momn/pipeline.hpp"

namespace momn {

FeatureMap::FeatureMap(Matrix mat) : mat_(std::move(mat)) {
  if (mat_.rows() == 0 || mat_.cols() == 0) {
    throw Error(ErrorKind::Dimension, "feature map needs n >= 1 and c >= 1");
  }
  require_finite(mat_, "feature map");
}

CovMatrix build_covariance(const FeatureMap& x) {
  Matrix a = pipeline::covariance(x.mat(), x.n());
  const double t = trace(a);
  return {std::move(a), t};
}

CovMatrix make_covariance(Matrix a) {
  require_square(a, "covariance");
  require_finite(a, "covariance");
  if (!is_symmetric(a, 1e-10)) throw Error(ErrorKind::Input, "covariance is not symmetric");
  const double t = trace(a);
  return {std::move(a), t};
}

CovMatrix pre_normalize(const CovMatrix& a) {
  const double t = trace(a.a);
  if (!(t > kDegenerateTrace)) {
    throw Error(ErrorKind::DegenerateInput,
                "covariance trace " + std::to_string(t) + " is not positive; consider jitter");
  }
  return {pipeline::pre_normalize(a.a, t), a.trace_pre};
}

Matrix post_compensate(const Matrix& y, double trace_pre, CompensationMode mode) {
  require_finite(y, "post_compensate input");
  switch (mode) {
    case CompensationMode::TraceOfInput:
      if (!(trace_pre > 0.0)) throw Error(ErrorKind::Parameter, "trace_pre must be positive");
      return pipeline::compensate(y, trace_pre);
    case CompensationMode::TraceOfOutput:
      return pipeline::compensate(y, trace(y));
    case CompensationMode::None:
      return y;
  }
  return y;
}

Descriptor upper_triangular(const Matrix& y) {
  Matrix row = upper_tri_row(y);
  return {row.values()};
}

Matrix from_upper_triangular(const Descriptor& d) {
  const std::size_t m = d.values.size();
  const auto c = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(m) + 1.0) - 1.0) / 2.0 + 0.5);
  if (c * (c + 1) / 2 != m || m == 0) {
    throw Error(ErrorKind::Dimension, "descriptor length " + std::to_string(m) +
                                          " is not a triangular number");
  }
  Matrix out(c, c);
  std::size_t k = 0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i; j < c; ++j) {
      out(i, j) = d.values[k];
      out(j, i) = d.values[k];
      ++k;
    }
  return out;
}

Norms norms(const Matrix& m) {
  require_finite(m, "norms input");
  Norms out{frobenius_norm(m), l1_norm(m), std::nullopt};
  if (m.is_square()) out.trace = trace(m);
  return out;
}

}  // namespace momn
