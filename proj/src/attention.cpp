#include "momn/attention.hpp"

#include <algorithm>
#include <string>

#include "momn/pipeline.hpp"
#include "momn/random.hpp"

namespace momn::attention {

std::size_t hidden_width(std::size_t c, std::size_t reduction) {
  if (reduction == 0) throw Error(ErrorKind::Parameter, "reduction must be positive");
  return std::max<std::size_t>(1, c / reduction);
}

void AttentionParams::validate(std::size_t c) const {
  const std::size_t k = w1.rows();
  const bool ok = w1.cols() == c && k >= 1 && b1.size() == k && w2.rows() == c &&
                  w2.cols() == k && b2.size() == c;
  if (!ok) {
    throw Error(ErrorKind::Dimension,
                "attention params do not match c=" + std::to_string(c) + " (w1 " +
                    std::to_string(w1.rows()) + "x" + std::to_string(w1.cols()) + ", w2 " +
                    std::to_string(w2.rows()) + "x" + std::to_string(w2.cols()) + ")");
  }
  require_finite(w1, "attention w1");
  require_finite(w2, "attention w2");
}

AttentionParams default_params(std::size_t c, std::size_t reduction, std::uint64_t seed) {
  const std::size_t k = hidden_width(c, reduction);
  Rng rng(seed);
  AttentionParams p{Matrix(k, c), std::vector<double>(k, 0.0), Matrix(c, k),
                    std::vector<double>(c, 0.0), reduction};
  for (double& w : p.w1.data()) w = rng.uniform(-0.1, 0.1);
  for (double& w : p.w2.data()) w = rng.uniform(-0.1, 0.1);
  return p;
}

AttentionParams constant_params(std::size_t c, std::size_t reduction, double bias) {
  const std::size_t k = hidden_width(c, reduction);
  return {Matrix(k, c), std::vector<double>(k, 0.0), Matrix(c, k), std::vector<double>(c, bias),
          reduction};
}

Matrix as_row(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

std::vector<double> channel_attention(const FeatureMap& x, const AttentionParams& p) {
  p.validate(x.c());
  Matrix v = pipeline::channel_attention(x.mat(), p.w1, as_row(p.b1), p.w2, as_row(p.b2));
  return v.values();
}

AttentionMap attention_map(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorKind::Dimension, "attention vector is empty");
  for (double vi : v) {
    if (!(vi >= 0.0 && vi <= 1.0)) {
      throw Error(ErrorKind::Input, "attention value " + std::to_string(vi) + " outside [0, 1]");
    }
  }
  return {v, pipeline::attention_map(as_row(v))};
}

double sparsity_loss(const AttentionMap& s, double beta2) {
  double total = 0.0;
  for (double x : s.s.data()) total += x;
  const double c = static_cast<double>(s.c());
  return beta2 * total / (c * c);
}

}  // namespace momn::attention
