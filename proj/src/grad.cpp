#include "momn/grad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "momn/pipeline.hpp"

namespace momn::grad {

namespace {

constexpr std::array kPrimitives{
    Op::MatMul,   Op::Add,     Op::Sub,      Op::Scale,     Op::AddIdentity,   Op::Affine,
    Op::Hadamard, Op::Transpose, Op::Symmetrize, Op::Sgn,   Op::Logistic,      Op::Relu,
    Op::MeanRows, Op::BroadcastRows, Op::UpperTri, Op::Trace, Op::ScaleBy,     Op::Sqrt,
    Op::Reciprocal, Op::Detach,
};

Matrix scalar(double s) { return Matrix(1, 1, s); }

void accumulate(Matrix* target, const Matrix& delta) {
  if (target == nullptr) return;
  if (target->empty()) {
    *target = delta;
    return;
  }
  require_same_shape(*target, delta, "gradient accumulation");
  auto t = target->data();
  auto d = delta.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += d[i];
}

// Scatter for the upper-triangular gather.
Matrix upper_tri_scatter(const Matrix& g, std::size_t c) {
  Matrix out(c, c);
  std::size_t k = 0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i; j < c; ++j) out(i, j) = g(0, k++);
  return out;
}

}  // namespace

const char* to_string(Op op) noexcept {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Scale: return "scale";
    case Op::AddIdentity: return "add_identity";
    case Op::Affine: return "affine";
    case Op::Hadamard: return "hadamard";
    case Op::Transpose: return "transpose";
    case Op::Symmetrize: return "symmetrize";
    case Op::Sgn: return "sgn";
    case Op::Logistic: return "logistic";
    case Op::Relu: return "relu";
    case Op::MeanRows: return "mean_rows";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::UpperTri: return "upper_tri";
    case Op::Trace: return "trace";
    case Op::ScaleBy: return "scale_by";
    case Op::Sqrt: return "sqrt";
    case Op::Reciprocal: return "reciprocal";
    case Op::Detach: return "detach";
  }
  return "?";
}

std::span<const Op> primitive_ops() noexcept { return kPrimitives; }

int arity(Op op) noexcept {
  switch (op) {
    case Op::Leaf: return 0;
    case Op::MatMul:
    case Op::Add:
    case Op::Sub:
    case Op::Hadamard:
    case Op::ScaleBy: return 2;
    default: return 1;
  }
}

Matrix evaluate(const Node& node, const Matrix* a, const Matrix* b) {
  switch (node.op) {
    case Op::Leaf: return node.value;
    case Op::MatMul: return momn::matmul(*a, *b);
    case Op::Add: return momn::add(*a, *b);
    case Op::Sub: return momn::sub(*a, *b);
    case Op::Scale: return momn::scale(*a, node.p0);
    case Op::AddIdentity: return momn::add_identity(*a, node.p0);
    case Op::Affine: return momn::affine(*a, node.p0, node.p1);
    case Op::Hadamard: return momn::hadamard(*a, *b);
    case Op::Transpose: return momn::transpose(*a);
    case Op::Symmetrize: return momn::symmetrize(*a);
    case Op::Sgn: return momn::sgn(*a);
    case Op::Logistic: return momn::logistic(*a);
    case Op::Relu: return momn::relu(*a);
    case Op::MeanRows: return momn::mean_rows(*a);
    case Op::BroadcastRows: return momn::broadcast_rows(*a, node.n);
    case Op::UpperTri: return momn::upper_tri_row(*a);
    case Op::Trace: return scalar(momn::trace(*a));
    case Op::ScaleBy: return momn::scale_by(*a, (*b)(0, 0));
    case Op::Sqrt: return scalar(momn::sqrt_scalar((*a)(0, 0)));
    case Op::Reciprocal: return scalar(momn::reciprocal((*a)(0, 0)));
    case Op::Detach: return *a;
  }
  throw Error(ErrorKind::Input, "unknown tape op");
}

Matrix tangent(const Node& node, const Matrix* a, const Matrix* b, const Matrix* ta,
               const Matrix* tb) {
  const Matrix& y = node.value;
  switch (node.op) {
    case Op::Leaf: return Matrix(y.rows(), y.cols());
    case Op::MatMul: return momn::add(momn::matmul(*ta, *b), momn::matmul(*a, *tb));
    case Op::Add: return momn::add(*ta, *tb);
    case Op::Sub: return momn::sub(*ta, *tb);
    case Op::Scale: return momn::scale(*ta, node.p0);
    case Op::AddIdentity: return *ta;
    case Op::Affine: return momn::scale(*ta, node.p0);
    case Op::Hadamard: return momn::add(momn::hadamard(*ta, *b), momn::hadamard(*a, *tb));
    case Op::Transpose: return momn::transpose(*ta);
    case Op::Symmetrize: return momn::symmetrize(*ta);
    case Op::Sgn:
    case Op::Detach: return Matrix(y.rows(), y.cols());
    case Op::Logistic: {
      Matrix out = *ta;
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= y.data()[i] * (1.0 - y.data()[i]);
      return out;
    }
    case Op::Relu: {
      Matrix out = *ta;
      for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= a->data()[i] > 0.0 ? 1.0 : 0.0;
      return out;
    }
    case Op::MeanRows: return momn::mean_rows(*ta);
    case Op::BroadcastRows: return momn::broadcast_rows(*ta, node.n);
    case Op::UpperTri: return momn::upper_tri_row(*ta);
    case Op::Trace: return scalar(momn::trace(*ta));
    case Op::ScaleBy:
      return momn::add(momn::scale(*ta, (*b)(0, 0)), momn::scale(*a, (*tb)(0, 0)));
    case Op::Sqrt: return scalar((*ta)(0, 0) / (2.0 * y(0, 0)));
    case Op::Reciprocal: return scalar(-(*ta)(0, 0) * y(0, 0) * y(0, 0));
  }
  throw Error(ErrorKind::Input, "unknown tape op");
}

void pullback(const Node& node, const Matrix* a, const Matrix* b, const Matrix& g, Matrix* ga,
              Matrix* gb) {
  const Matrix& y = node.value;
  switch (node.op) {
    case Op::Leaf:
    case Op::Sgn:
    case Op::Detach: return;
    case Op::MatMul:
      accumulate(ga, momn::matmul(g, momn::transpose(*b)));
      accumulate(gb, momn::matmul(momn::transpose(*a), g));
      return;
    case Op::Add:
      accumulate(ga, g);
      accumulate(gb, g);
      return;
    case Op::Sub:
      accumulate(ga, g);
      accumulate(gb, momn::scale(g, -1.0));
      return;
    case Op::Scale: accumulate(ga, momn::scale(g, node.p0)); return;
    case Op::AddIdentity: accumulate(ga, g); return;
    case Op::Affine: accumulate(ga, momn::scale(g, node.p0)); return;
    case Op::Hadamard:
      accumulate(ga, momn::hadamard(g, *b));
      accumulate(gb, momn::hadamard(g, *a));
      return;
    case Op::Transpose: accumulate(ga, momn::transpose(g)); return;
    case Op::Symmetrize: accumulate(ga, momn::symmetrize(g)); return;
    case Op::Logistic: {
      Matrix d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= y.data()[i] * (1.0 - y.data()[i]);
      accumulate(ga, d);
      return;
    }
    case Op::Relu: {
      Matrix d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= a->data()[i] > 0.0 ? 1.0 : 0.0;
      accumulate(ga, d);
      return;
    }
    case Op::MeanRows: {
      const double inv = 1.0 / static_cast<double>(a->rows());
      accumulate(ga, momn::broadcast_rows(momn::scale(g, inv), a->rows()));
      return;
    }
    case Op::BroadcastRows: {
      Matrix d(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d(0, j) += g(i, j);
      accumulate(ga, d);
      return;
    }
    case Op::UpperTri: accumulate(ga, upper_tri_scatter(g, a->rows())); return;
    case Op::Trace: accumulate(ga, momn::scale(Matrix::identity(a->rows()), g(0, 0))); return;
    case Op::ScaleBy:
      accumulate(ga, momn::scale(g, (*b)(0, 0)));
      accumulate(gb, scalar(momn::dot(*a, g)));
      return;
    case Op::Sqrt: accumulate(ga, scalar(g(0, 0) / (2.0 * y(0, 0)))); return;
    case Op::Reciprocal: accumulate(ga, scalar(-g(0, 0) * y(0, 0) * y(0, 0))); return;
  }
}

const Matrix& Var::value() const { return tape->node(id).value; }

Var Tape::leaf(Matrix value) {
  Node node;
  node.op = Op::Leaf;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Node node) {
  const Matrix* a = node.a >= 0 ? &nodes_[static_cast<std::size_t>(node.a)].value : nullptr;
  const Matrix* b = node.b >= 0 ? &nodes_[static_cast<std::size_t>(node.b)].value : nullptr;
  node.value = evaluate(node, a, b);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

std::vector<Matrix> Tape::replay() const {
  std::vector<Matrix> values;
  values.reserve(nodes_.size());
  for (const Node& node : nodes_) {
    const Matrix* a = node.a >= 0 ? &values[static_cast<std::size_t>(node.a)] : nullptr;
    const Matrix* b = node.b >= 0 ? &values[static_cast<std::size_t>(node.b)] : nullptr;
    values.push_back(evaluate(node, a, b));
  }
  return values;
}

bool Tape::replay_matches() const {
  const auto values = replay();
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!(values[i] == nodes_[i].value)) return false;
  return true;
}

std::size_t Tape::count(Op op) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; }));
}

namespace {

Var unary(Op op, Var a, double p0 = 0.0, double p1 = 0.0, std::size_t n = 0) {
  Node node;
  node.op = op;
  node.a = a.id;
  node.p0 = p0;
  node.p1 = p1;
  node.n = n;
  return a.tape->record(std::move(node));
}

Var binary(Op op, Var a, Var b) {
  if (a.tape != b.tape) throw Error(ErrorKind::Input, "variables from different tapes");
  Node node;
  node.op = op;
  node.a = a.id;
  node.b = b.id;
  return a.tape->record(std::move(node));
}

}  // namespace

Var matmul(Var a, Var b) { return binary(Op::MatMul, a, b); }
Var add(Var a, Var b) { return binary(Op::Add, a, b); }
Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
Var scale(Var a, double s) { return unary(Op::Scale, a, s); }
Var add_identity(Var a, double s) { return unary(Op::AddIdentity, a, s); }
Var affine(Var a, double alpha, double beta) { return unary(Op::Affine, a, alpha, beta); }
Var hadamard(Var a, Var b) { return binary(Op::Hadamard, a, b); }
Var transpose(Var a) { return unary(Op::Transpose, a); }
Var symmetrize(Var a) { return unary(Op::Symmetrize, a); }
Var sgn(Var a) { return unary(Op::Sgn, a); }
Var logistic(Var a) { return unary(Op::Logistic, a); }
Var relu(Var a) { return unary(Op::Relu, a); }
Var mean_rows(Var a) { return unary(Op::MeanRows, a); }
Var broadcast_rows(Var row, std::size_t n) { return unary(Op::BroadcastRows, row, 0.0, 0.0, n); }
Var upper_tri_row(Var a) { return unary(Op::UpperTri, a); }
Var trace(Var a) { return unary(Op::Trace, a); }
Var scale_by(Var a, Var s) { return binary(Op::ScaleBy, a, s); }
Var sqrt_scalar(Var s) { return unary(Op::Sqrt, s); }
Var reciprocal(Var s) { return unary(Op::Reciprocal, s); }
Var detach(Var a) { return unary(Op::Detach, a); }

TapedRun forward_with_tape(const FeatureMap& x, const SolverConfig& cfg,
                           const AttentionSource& attn) {
  cfg.validate();
  TapedRun out;
  Tape& tape = out.tape;
  const std::size_t c = x.c();

  Var xv = tape.leaf(x.mat());
  tape.x = xv.id;

  std::optional<Var> gate;
  const bool wants_attention = cfg.sparsity_mode == SparsityMode::Attention && cfg.objectives.sparsity;
  if (const auto* p = std::get_if<attention::AttentionParams>(&attn)) {
    p->validate(c);
    Var w1 = tape.leaf(p->w1);
    Var b1 = tape.leaf(attention::as_row(p->b1));
    Var w2 = tape.leaf(p->w2);
    Var b2 = tape.leaf(attention::as_row(p->b2));
    tape.w1 = w1.id;
    tape.b1 = b1.id;
    tape.w2 = w2.id;
    tape.b2 = b2.id;
    Var v = pipeline::channel_attention(xv, w1, b1, w2, b2);
    tape.attention_v = v.id;
    Var s = pipeline::attention_map(v);
    tape.attention_s = s.id;
    gate = affine(s, -1.0, 1.0);
  } else if (const auto* vec = std::get_if<std::vector<double>>(&attn)) {
    attention::attention_map(*vec);  // range check
    if (vec->size() != c) throw Error(ErrorKind::Dimension, "attention vector length does not match c");
    Var v = tape.leaf(attention::as_row(*vec));
    tape.attention_v = v.id;
    Var s = pipeline::attention_map(v);
    tape.attention_s = s.id;
    gate = affine(s, -1.0, 1.0);
  }
  if (wants_attention && !gate) {
    throw Error(ErrorKind::Configuration, "attention sparsity mode needs attention params or a vector");
  }

  Var a = pipeline::covariance(xv, x.n());
  a = pipeline::with_jitter(a, cfg.jitter);
  Var trace_pre = trace(a);
  if (!(trace_pre.value()(0, 0) > kDegenerateTrace)) {
    throw Error(ErrorKind::DegenerateInput, "covariance trace is not positive; consider jitter");
  }
  Var trace_used = cfg.detach_traces ? detach(trace_pre) : trace_pre;
  Var a_norm = pipeline::pre_normalize(a, trace_used);

  Var y = a_norm;
  Var j1 = a_norm;
  Var j2 = a_norm;
  Var z = tape.leaf(Matrix::identity(c));
  Var l1 = tape.leaf(Matrix(c, c));
  Var l2 = l1;
  double mu1 = cfg.mu1;
  double mu2 = cfg.mu2;
  const auto& obj = cfg.objectives;

  for (int k = 0; k < cfg.k_iters; ++k) {
    if (obj.low_rank) j1 = pipeline::j1_update(y, l1, mu1, cfg.beta1);
    if (obj.sparsity) {
      j2 = cfg.sparsity_mode == SparsityMode::Sign
               ? pipeline::j2_sign_update(y, l2, j2, mu2, cfg.beta2)
               : pipeline::j2_attention_update(y, l2, j2, *gate, mu2, cfg.beta2);
    }
    Var y_hat = y;
    if (obj.low_rank && obj.sparsity) {
      y_hat = pipeline::aggregate_both(j1, j2, l1, l2, mu1, mu2);
    } else if (obj.low_rank) {
      y_hat = pipeline::aggregate_one(j1, l1, mu1);
    } else if (obj.sparsity) {
      y_hat = pipeline::aggregate_one(j2, l2, mu2);
    }
    for (int inner = 0; inner < cfg.ns_inner; ++inner) {
      auto next = pipeline::newton_schulz_step(inner == 0 ? y_hat : y, z);
      y = next.y;
      z = next.z;
    }
    if (obj.low_rank) l1 = pipeline::multiplier_update(l1, j1, y, mu1);
    if (obj.sparsity) l2 = pipeline::multiplier_update(l2, j2, y, mu2);
    mu1 *= cfg.rho;
    mu2 *= cfg.rho;
  }

  Var y_out = y;
  switch (cfg.compensation_mode) {
    case CompensationMode::TraceOfInput: y_out = pipeline::compensate(y, trace_used); break;
    case CompensationMode::TraceOfOutput: {
      Var t = trace(y);
      y_out = pipeline::compensate(y, cfg.detach_traces ? detach(t) : t);
      break;
    }
    case CompensationMode::None: break;
  }
  Var d = upper_tri_row(y_out);
  tape.descriptor = d.id;
  out.descriptor = Descriptor{d.value().values()};
  return out;
}

Gradients backward(const Tape& tape, std::span<const double> d_descriptor,
                   const Matrix* d_attention_s, const BackwardOptions& options) {
  if (tape.descriptor < 0) throw Error(ErrorKind::Input, "tape has no descriptor output");
  const Matrix& desc = tape.node(tape.descriptor).value;
  if (d_descriptor.size() != desc.size()) {
    throw Error(ErrorKind::Dimension, "seed length " + std::to_string(d_descriptor.size()) +
                                          " does not match descriptor length " +
                                          std::to_string(desc.size()));
  }
  const auto& nodes = tape.nodes();
  std::vector<Matrix> adj(nodes.size());
  adj[static_cast<std::size_t>(tape.descriptor)] =
      Matrix(1, d_descriptor.size(), std::vector<double>(d_descriptor.begin(), d_descriptor.end()));
  if (d_attention_s != nullptr) {
    if (tape.attention_s < 0) throw Error(ErrorKind::Input, "tape has no attention map");
    require_same_shape(*d_attention_s, tape.node(tape.attention_s).value, "attention seed");
    accumulate(&adj[static_cast<std::size_t>(tape.attention_s)], *d_attention_s);
  }

  for (std::size_t idx = nodes.size(); idx-- > 0;) {
    const Node& node = nodes[idx];
    if (node.op == Op::Leaf || adj[idx].empty()) continue;
    const Matrix* a = node.a >= 0 ? &nodes[static_cast<std::size_t>(node.a)].value : nullptr;
    const Matrix* b = node.b >= 0 ? &nodes[static_cast<std::size_t>(node.b)].value : nullptr;
    Matrix g = adj[idx];
    if (options.corrupt && *options.corrupt == node.op) g = momn::scale(g, options.factor);
    Matrix* ga = node.a >= 0 ? &adj[static_cast<std::size_t>(node.a)] : nullptr;
    Matrix* gb = node.b >= 0 ? &adj[static_cast<std::size_t>(node.b)] : nullptr;
    if (node.a >= 0 && node.a == node.b) {
      // Both operands are the same node.
      Matrix tmp_a, tmp_b;
      pullback(node, a, b, g, &tmp_a, &tmp_b);
      if (!tmp_a.empty()) accumulate(ga, tmp_a);
      if (!tmp_b.empty()) accumulate(ga, tmp_b);
      continue;
    }
    pullback(node, a, b, g, ga, gb);
  }

  auto grad_or_zero = [&](int id) {
    const Matrix& v = nodes[static_cast<std::size_t>(id)].value;
    const Matrix& g = adj[static_cast<std::size_t>(id)];
    return g.empty() ? Matrix(v.rows(), v.cols()) : g;
  };

  Gradients out{grad_or_zero(tape.x), std::nullopt};
  if (tape.w1 >= 0) {
    attention::AttentionParams dp;
    dp.w1 = grad_or_zero(tape.w1);
    dp.b1 = grad_or_zero(tape.b1).values();
    dp.w2 = grad_or_zero(tape.w2);
    dp.b2 = grad_or_zero(tape.b2).values();
    dp.reduction = 0;
    out.dparams = std::move(dp);
  }
  return out;
}

Matrix fd_gradient(const std::function<double(const Matrix&)>& fn, const Matrix& x, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::Parameter, "fd_gradient needs eps > 0");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x.data()[k];
    probe.data()[k] = orig + eps;
    const double up = fn(probe);
    probe.data()[k] = orig - eps;
    const double down = fn(probe);
    probe.data()[k] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorKind::Numeric, "finite-difference probe produced a non-finite value");
    }
    grad.data()[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

namespace {

// Values of every sgn/relu argument, in tape order; a change in any sign
// between two tapes means the probe crossed a non-differentiable point.
std::vector<double> switch_arguments(const Tape& tape) {
  std::vector<double> out;
  for (const Node& node : tape.nodes()) {
    if (node.op != Op::Sgn && node.op != Op::Relu) continue;
    const auto& arg = tape.node(node.a).value;
    out.insert(out.end(), arg.data().begin(), arg.data().end());
  }
  return out;
}

bool same_switches(const std::vector<double>& base, const std::vector<double>& probe) {
  if (base.size() != probe.size()) return false;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto side = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
    if (side(base[i]) != side(probe[i])) return false;
  }
  return true;
}

double descriptor_sum(const Descriptor& d) {
  double s = 0.0;
  for (double v : d.values) s += v;
  return s;
}

}  // namespace

GradReport grad_check(const FeatureMap& x, const SolverConfig& cfg, const AttentionSource& attn,
                      double tol, const GradCheckOptions& options) {
  GradReport report;
  report.tolerance = tol;
  try {
    TapedRun base = forward_with_tape(x, cfg, attn);
    const std::vector<double> seed(base.descriptor.values.size(), 1.0);
    const Gradients grads = backward(base.tape, seed, nullptr, options.backward);
    const auto base_switches = switch_arguments(base.tape);

    report.min_sign_margin = std::numeric_limits<double>::infinity();
    for (const Node& node : base.tape.nodes()) {
      if (node.op != Op::Sgn) continue;
      for (double v : base.tape.node(node.a).value.data())
        report.min_sign_margin = std::min(report.min_sign_margin, std::abs(v));
    }

    // One probe: loss at the perturbed point, plus whether any switch flipped.
    auto probe = [&](const FeatureMap& xp, const AttentionSource& ap, bool& flipped) {
      TapedRun r = forward_with_tape(xp, cfg, ap);
      if (!same_switches(base_switches, switch_arguments(r.tape))) flipped = true;
      return descriptor_sum(r.descriptor);
    };

    auto compare = [&](const std::string& name, const Matrix& analytic, const Matrix& numeric,
                       const std::vector<bool>& flipped) {
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        GradEntry e{name, k / analytic.cols(), k % analytic.cols(), analytic.data()[k],
                    numeric.data()[k], relative_error(analytic.data()[k], numeric.data()[k]),
                    flipped[k]};
        if (e.excluded) {
          ++report.excluded;
        } else {
          report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        }
        report.entries.push_back(e);
      }
    };

    {
      std::vector<bool> flipped(x.mat().size(), false);
      std::size_t index = 0;
      Matrix numeric = fd_gradient(
          [&](const Matrix& xp) {
            bool f = false;
            const double v = probe(FeatureMap(xp), attn, f);
            if (f) flipped[index / 2] = true;
            ++index;
            return v;
          },
          x.mat(), options.eps);
      compare("x", grads.dx, numeric, flipped);
    }

    if (const auto* p = std::get_if<attention::AttentionParams>(&attn); p && grads.dparams) {
      auto check_tensor = [&](const std::string& name, const Matrix& value, const Matrix& analytic,
                              auto&& assign) {
        std::vector<bool> flipped(value.size(), false);
        std::size_t index = 0;
        Matrix numeric = fd_gradient(
            [&](const Matrix& probe_value) {
              attention::AttentionParams q = *p;
              assign(q, probe_value);
              bool f = false;
              const double v = probe(x, AttentionSource{q}, f);
              if (f) flipped[index / 2] = true;
              ++index;
              return v;
            },
            value, options.eps);
        compare(name, analytic, numeric, flipped);
      };
      const auto& dp = *grads.dparams;
      check_tensor("w1", p->w1, dp.w1, [](auto& q, const Matrix& m) { q.w1 = m; });
      check_tensor("b1", attention::as_row(p->b1), attention::as_row(dp.b1),
                   [](auto& q, const Matrix& m) { q.b1 = m.values(); });
      check_tensor("w2", p->w2, dp.w2, [](auto& q, const Matrix& m) { q.w2 = m; });
      check_tensor("b2", attention::as_row(p->b2), attention::as_row(dp.b2),
                   [](auto& q, const Matrix& m) { q.b2 = m.values(); });
    }
    report.pass = report.max_rel_error <= tol;
  } catch (const Error& e) {
    report.pass = false;
    report.error = e.what();
    report.max_rel_error = std::numeric_limits<double>::infinity();
  }
  return report;
}

}  // namespace momn::grad
