#pragma once

#include <cstddef>

// Formulas of the normalization layer, written once over a generic value type.
// Instantiated with momn::Matrix by the solver and with grad::Var by the tape;
// overloads are found by ADL. Every helper here must stay a pure composition of
// the primitives declared in matrix.hpp.

namespace momn::pipeline {

// A = X^T C X with C = (1/n)(I - 11^T/n), computed as the centered Gram matrix.
template <class M>
M covariance(const M& x, std::size_t n) {
  M centered = sub(x, broadcast_rows(mean_rows(x), n));
  return symmetrize(scale(matmul(transpose(centered), centered), 1.0 / static_cast<double>(n)));
}

template <class M>
M with_jitter(const M& a, double jitter) {
  return jitter > 0.0 ? add_identity(a, jitter) : a;
}

// A / tr(A)
template <class M, class S>
M pre_normalize(const M& a, const S& trace_pre) {
  return scale_by(a, reciprocal(trace_pre));
}

// Y - (1/mu1) L1 - (beta1/mu1) I
template <class M>
M j1_update(const M& y, const M& l1, double mu1, double beta1) {
  return add_identity(sub(y, scale(l1, 1.0 / mu1)), -beta1 / mu1);
}

// Y - (1/mu2) L2 - (beta2/mu2) sgn(J2)
template <class M>
M j2_sign_update(const M& y, const M& l2, const M& j2, double mu2, double beta2) {
  return sub(sub(y, scale(l2, 1.0 / mu2)), scale(sgn(j2), beta2 / mu2));
}

// Y - (1/mu2) L2 - (beta2/mu2) (1 - S) o J2, with gate = 1 - S precomputed.
template <class M>
M j2_attention_update(const M& y, const M& l2, const M& j2, const M& gate, double mu2,
                      double beta2) {
  return sub(sub(y, scale(l2, 1.0 / mu2)), scale(hadamard(gate, j2), beta2 / mu2));
}

// Aggregate of the enabled auxiliaries: sum(mu_i J_i + L_i) / sum(mu_i).
template <class M>
M aggregate_both(const M& j1, const M& j2, const M& l1, const M& l2, double mu1, double mu2) {
  const double inv = 1.0 / (mu1 + mu2);
  return add(scale(add(scale(j1, mu1), scale(j2, mu2)), inv), scale(add(l1, l2), inv));
}

template <class M>
M aggregate_one(const M& j, const M& l, double mu) {
  const double inv = 1.0 / mu;
  return add(scale(scale(j, mu), inv), scale(l, inv));
}

template <class M>
struct RootPair {
  M y;
  M z;
};

// One coupled Newton-Schulz step on the aggregate:
//   Y <- Yh + 1/2 Yh (I - Z Yh),  Z <- Z + 1/2 (I - Z Yh) Z,  then Y symmetrized.
template <class M>
RootPair<M> newton_schulz_step(const M& y_hat, const M& z) {
  M residual = add_identity(scale(matmul(z, y_hat), -1.0), 1.0);
  M y = symmetrize(add(y_hat, scale(matmul(y_hat, residual), 0.5)));
  M z_next = add(z, scale(matmul(residual, z), 0.5));
  return {std::move(y), std::move(z_next)};
}

// L <- L + mu (J - Y)
template <class M>
M multiplier_update(const M& l, const M& j, const M& y, double mu) {
  return add(l, scale(sub(j, y), mu));
}

template <class M, class S>
M compensate(const M& y, const S& factor) {
  return scale_by(y, sqrt_scalar(factor));
}

// v = logistic(W2 relu(W1 mean(X) + b1) + b2), rows as 1 x k matrices.
template <class M>
M channel_attention(const M& x, const M& w1, const M& b1, const M& w2, const M& b2) {
  M hidden = relu(add(matmul(mean_rows(x), transpose(w1)), b1));
  return logistic(add(matmul(hidden, transpose(w2)), b2));
}

// S = v^T v for a 1 x c row v.
template <class M>
M attention_map(const M& v) {
  return matmul(transpose(v), v);
}

}  // namespace momn::pipeline
