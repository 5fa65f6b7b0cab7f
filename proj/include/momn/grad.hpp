#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momn/attention.hpp"
#include "momn/solver.hpp"

// Reverse-mode differentiation through the unrolled normalization layer.
//
// The forward pass is the same pipeline template the solver runs, instantiated
// with Var instead of Matrix, so the recorded descriptor equals run()'s
// bit-for-bit. sgn is recorded but contributes no local derivative.

namespace momn::grad {

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Scale,
  AddIdentity,
  Affine,
  Hadamard,
  Transpose,
  Symmetrize,
  Sgn,
  Logistic,
  Relu,
  MeanRows,
  BroadcastRows,
  UpperTri,
  Trace,
  ScaleBy,
  Sqrt,
  Reciprocal,
  Detach,
};

const char* to_string(Op op) noexcept;

/// Every op except Leaf, for exhaustive per-primitive checks.
std::span<const Op> primitive_ops() noexcept;

int arity(Op op) noexcept;

struct Node {
  Op op = Op::Leaf;
  int a = -1;
  int b = -1;
  double p0 = 0.0;     // Scale factor, AddIdentity shift, Affine alpha
  double p1 = 0.0;     // Affine beta
  std::size_t n = 0;   // BroadcastRows count
  Matrix value;
};

/// Forward value of a node from its input values.
Matrix evaluate(const Node& node, const Matrix* a, const Matrix* b);

/// Forward-mode tangent of a node: J * (ta, tb).
Matrix tangent(const Node& node, const Matrix* a, const Matrix* b, const Matrix* ta,
               const Matrix* tb);

/// Reverse rule: accumulates J^T g into ga / gb (either may be null).
void pullback(const Node& node, const Matrix* a, const Matrix* b, const Matrix& g, Matrix* ga,
              Matrix* gb);

class Tape;

/// Handle to a recorded value.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
};

class Tape {
 public:
  Var leaf(Matrix value);
  Var record(Node node);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Re-executes every non-leaf node from the recorded leaves.
  std::vector<Matrix> replay() const;

  /// True if replay() reproduces every recorded value bit-exactly.
  bool replay_matches() const;

  std::size_t count(Op op) const;

  // Named positions in the tape, filled in by forward_with_tape.
  int x = -1;
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
  int attention_v = -1;
  int attention_s = -1;
  int descriptor = -1;

 private:
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_identity(Var a, double s);
Var affine(Var a, double alpha, double beta);
Var hadamard(Var a, Var b);
Var transpose(Var a);
Var symmetrize(Var a);
Var sgn(Var a);
Var logistic(Var a);
Var relu(Var a);
Var mean_rows(Var a);
Var broadcast_rows(Var row, std::size_t n);
Var upper_tri_row(Var a);
Var trace(Var a);
Var scale_by(Var a, Var s);
Var sqrt_scalar(Var s);
Var reciprocal(Var s);
Var detach(Var a);

struct TapedRun {
  Descriptor descriptor;
  Tape tape;
};

/// Records the full layer for x. Params in `attn` become differentiable leaves.
TapedRun forward_with_tape(const FeatureMap& x, const SolverConfig& cfg,
                           const AttentionSource& attn = {});

struct Gradients {
  Matrix dx;
  std::optional<attention::AttentionParams> dparams;
};

/// Test hook: scales the reverse rule of one op by `factor`.
struct BackwardOptions {
  std::optional<Op> corrupt;
  double factor = 1.5;
};

/// Gradient of d_descriptor . descriptor (+ <d_attention_s, S> when given).
Gradients backward(const Tape& tape, std::span<const double> d_descriptor,
                   const Matrix* d_attention_s = nullptr, const BackwardOptions& options = {});

/// Central differences (f(x + eps e_ij) - f(x - eps e_ij)) / (2 eps).
Matrix fd_gradient(const std::function<double(const Matrix&)>& fn, const Matrix& x, double eps);

struct GradEntry {
  std::string tensor;  // "x", "w1", "b1", "w2", "b2"
  std::size_t i = 0;
  std::size_t j = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool excluded = false;  // a sgn or relu switched under the perturbation
};

struct GradReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  double min_sign_margin = 0.0;  // smallest |argument| of any recorded sgn
  std::size_t excluded = 0;
  std::vector<GradEntry> entries;
  bool pass = false;
  std::string error;  // set when the forward pass itself failed
};

struct GradCheckOptions {
  double eps = 1e-5;
  BackwardOptions backward{};
};

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Compares backward() with fd_gradient on loss = sum(descriptor).
GradReport grad_check(const FeatureMap& x, const SolverConfig& cfg, const AttentionSource& attn,
                      double tol, const GradCheckOptions& options = {});

}  // namespace momn::grad
