#pragma once

#include "momn/grad.hpp"
#include "test_util.hpp"

namespace momn::test {

using grad::Node;
using grad::Op;

struct PrimitiveCase {
  Node node;
  Matrix a, b;  // b empty for unary ops
};

// Inputs sized and positioned so every op is smooth at the sample point.
inline PrimitiveCase make_case(Op op, std::uint64_t seed) {
  PrimitiveCase pc;
  pc.node.op = op;
  auto away_from_zero = [](Matrix m) {
    for (double& v : m.data()) v += v >= 0.0 ? 0.5 : -0.5;
    return m;
  };
  switch (op) {
    case Op::MatMul:
      pc.a = random_matrix(seed, 3, 4);
      pc.b = random_matrix(seed + 1, 4, 2);
      break;
    case Op::Add:
    case Op::Sub:
    case Op::Hadamard:
      pc.a = random_matrix(seed, 3, 3);
      pc.b = random_matrix(seed + 1, 3, 3);
      break;
    case Op::ScaleBy:
      pc.a = random_matrix(seed, 3, 3);
      pc.b = Matrix{{0.7}};
      break;
    case Op::Sqrt:
    case Op::Reciprocal: pc.a = Matrix{{1.3}}; break;
    case Op::BroadcastRows:
      pc.a = random_matrix(seed, 1, 4);
      pc.node.n = 3;
      break;
    case Op::Sgn:
    case Op::Relu: pc.a = away_from_zero(random_matrix(seed, 3, 4)); break;
    case Op::MeanRows: pc.a = random_matrix(seed, 5, 3); break;
    case Op::Transpose: pc.a = random_matrix(seed, 2, 5); break;
    default: pc.a = random_matrix(seed, 4, 4); break;
  }
  pc.node.p0 = op == Op::Scale || op == Op::AddIdentity || op == Op::Affine ? -0.37 : 0.0;
  pc.node.p1 = op == Op::Affine ? 0.8 : 0.0;
  pc.node.value = grad::evaluate(pc.node, &pc.a, pc.b.empty() ? nullptr : &pc.b);
  return pc;
}

/// |<J u, w> - <u, J^T w>| relative to max(1, |<J u, w>|) for one primitive.
inline double dot_product_gap(grad::Op op, std::uint64_t seed) {
  using namespace grad;
  const PrimitiveCase pc = make_case(op, 10 * seed + 1);
  const Matrix* b = pc.b.empty() ? nullptr : &pc.b;
  const Matrix ua = random_matrix(seed + 100, pc.a.rows(), pc.a.cols());
  const Matrix ub = b ? random_matrix(seed + 200, b->rows(), b->cols()) : Matrix();
  const Matrix w = random_matrix(seed + 300, pc.node.value.rows(), pc.node.value.cols());
  const Matrix ju = tangent(pc.node, &pc.a, b, &ua, b ? &ub : nullptr);
  Matrix ga, gb;
  pullback(pc.node, &pc.a, b, w, &ga, b ? &gb : nullptr);
  const double lhs = dot(ju, w);
  double rhs = ga.empty() ? 0.0 : dot(ua, ga);
  if (b && !gb.empty()) rhs += dot(ub, gb);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

}  // namespace momn::test
