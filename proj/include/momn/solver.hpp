#pragma once

#include <chrono>
#include <optional>
#include <variant>
#include <vector>

#include "momn/attention.hpp"
#include "momn/linalg.hpp"

namespace momn {

enum class SparsityMode { Sign, Attention };

/// Which auxiliary objectives take part besides the square root. Disabling one
/// skips its update and multiplier entirely (used for per-regularizer timing).
struct Objectives {
  bool low_rank = true;
  bool sparsity = true;

  friend bool operator==(const Objectives&, const Objectives&) = default;
};

struct SolverConfig {
  double beta1 = 0.5;  // low-rank weight
  double beta2 = 1.0;  // sparsity weight
  double mu1 = 10.0;
  double mu2 = 10.0;
  double rho = 1.1;
  int k_iters = 5;
  SparsityMode sparsity_mode = SparsityMode::Sign;
  CompensationMode compensation_mode = CompensationMode::TraceOfInput;
  double jitter = 0.0;
  int ns_inner = 1;  // coupled Newton-Schulz steps per outer iteration
  Objectives objectives{};
  // Treat the pre-normalization and compensation traces as constants in backward.
  bool detach_traces = false;

  /// Throws parameter-error on any violated bound.
  void validate() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct SolverState {
  Matrix y, z, j1, j2, l1, l2;
  double mu1 = 0.0;
  double mu2 = 0.0;
  int iter = 0;
};

struct TelemetryRecord {
  int iter = 0;
  double objective = 0.0;
  double sqrt_residual = 0.0;           // ||Y^2 - A||_F
  double relative_sqrt_residual = 0.0;  // ... / ||A||_F
  double consensus_j1 = 0.0;            // ||J1 - Y||_F
  double consensus_j2 = 0.0;            // ||J2 - Y||_F
  std::vector<int> ranks;               // approx_rank(Y, tau) per configured tau
  double l1 = 0.0;
};

struct Telemetry {
  std::vector<double> taus;
  std::vector<TelemetryRecord> records;
};

/// Wall-clock spent in each step kind, accumulated across a run.
struct StepTimes {
  std::chrono::nanoseconds j1{0}, j2{0}, y{0}, multipliers{0}, total{0};
};

/// Attention input for the sparsity step: nothing, learned params (needs a
/// feature map), or an injected attention vector.
using AttentionSource = std::variant<std::monostate, attention::AttentionParams, std::vector<double>>;

struct RunOptions {
  bool telemetry = true;
  std::vector<double> taus{0.04};
  StepTimes* timer = nullptr;
};

struct RunResult {
  Matrix y;          // compensated output
  Matrix y_pre;      // Y^K before compensation
  Descriptor descriptor;
  Telemetry telemetry;
  CovMatrix normalized;  // trace-normalized input, trace_pre of the raw covariance
  std::optional<attention::AttentionMap> attention;
  SolverState state;
};

SolverState init_state(const CovMatrix& a, const SolverConfig& cfg);

void step_j1(SolverState& state, const SolverConfig& cfg);
void step_j2(SolverState& state, const SolverConfig& cfg,
             const attention::AttentionMap* s = nullptr);
void step_y(SolverState& state, const SolverConfig& cfg);
void step_multipliers(SolverState& state, const SolverConfig& cfg);

/// Full pipeline: covariance, pre-normalization, K iterations, compensation, descriptor.
RunResult run(const FeatureMap& x, const SolverConfig& cfg, const AttentionSource& attn = {},
              const RunOptions& options = {});

/// Same, starting from a covariance (attention must be injected as a vector).
RunResult run(const CovMatrix& a, const SolverConfig& cfg, const AttentionSource& attn = {},
              const RunOptions& options = {});

/// ||Y^2 - A||_F^2 + beta1 ||Y||_* + beta2 ||Y||_1
double objective(const Matrix& y, const Matrix& a, const SolverConfig& cfg);

TelemetryRecord measure(const SolverState& state, const Matrix& a, const SolverConfig& cfg,
                        const std::vector<double>& taus);

}  // namespace momn
