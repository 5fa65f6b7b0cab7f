#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "momn/linalg.hpp"

namespace momn::attention {

/// Channel-attention bottleneck: c -> k = max(1, c / r) -> c.
struct AttentionParams {
  Matrix w1;               // k x c
  std::vector<double> b1;  // k
  Matrix w2;               // c x k
  std::vector<double> b2;  // c
  std::size_t reduction = 16;

  std::size_t channels() const noexcept { return w1.cols(); }
  std::size_t hidden() const noexcept { return w1.rows(); }

  /// Throws dimension-error unless the four tensors agree with each other and with c.
  void validate(std::size_t c) const;
};

/// S = v^T v with every v_i in [0, 1].
struct AttentionMap {
  std::vector<double> v;
  Matrix s;

  std::size_t c() const noexcept { return v.size(); }
};

std::size_t hidden_width(std::size_t c, std::size_t reduction);

/// Weights uniform in [-0.1, 0.1] from a fixed seed, biases zero.
AttentionParams default_params(std::size_t c, std::size_t reduction = 16, std::uint64_t seed = 0);

/// Zero weights; b2 filled with `bias`. v = logistic(bias) everywhere.
AttentionParams constant_params(std::size_t c, std::size_t reduction, double bias);

std::vector<double> channel_attention(const FeatureMap& x, const AttentionParams& p);

AttentionMap attention_map(const std::vector<double>& v);

/// beta2 * mean(S)
double sparsity_loss(const AttentionMap& s, double beta2);

Matrix as_row(const std::vector<double>& v);

}  // namespace momn::attention
