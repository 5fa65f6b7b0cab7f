#include "momn/solver.hpp"

#include <cmath>
#include <string>

#include "momn/pipeline.hpp"
#include "momn/spectral.hpp"

namespace momn {

namespace {

using Clock = std::chrono::steady_clock;

class ScopedTime {
 public:
  explicit ScopedTime(std::chrono::nanoseconds* slot) : slot_(slot), start_(Clock::now()) {}
  ~ScopedTime() {
    if (slot_) *slot_ += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_);
  }
  ScopedTime(const ScopedTime&) = delete;
  ScopedTime& operator=(const ScopedTime&) = delete;

 private:
  std::chrono::nanoseconds* slot_;
  Clock::time_point start_;
};

std::chrono::nanoseconds* slot(StepTimes* t, std::chrono::nanoseconds StepTimes::*member) {
  return t ? &(t->*member) : nullptr;
}

void check_finite(const Matrix& m, const char* name, int iter) {
  if (!m.all_finite()) {
    throw Error(ErrorKind::Numeric, std::string("non-finite entries in ") + name, iter);
  }
}

void require_param(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::Parameter, what);
}

}  // namespace

void SolverConfig::validate() const {
  require_param(std::isfinite(beta1) && beta1 >= 0.0, "beta1 must be >= 0");
  require_param(std::isfinite(beta2) && beta2 >= 0.0, "beta2 must be >= 0");
  require_param(std::isfinite(mu1) && mu1 > 0.0, "mu1 must be > 0");
  require_param(std::isfinite(mu2) && mu2 > 0.0, "mu2 must be > 0");
  require_param(std::isfinite(rho) && rho > 1.0, "rho must be > 1");
  require_param(k_iters >= 0, "k_iters must be >= 0");
  require_param(ns_inner >= 1, "ns_inner must be >= 1");
  require_param(std::isfinite(jitter) && jitter >= 0.0, "jitter must be >= 0");
}

SolverState init_state(const CovMatrix& a, const SolverConfig& cfg) {
  cfg.validate();
  require_square(a.a, "init_state covariance");
  const double t = trace(a.a);
  if (std::abs(t - 1.0) > 1e-10) {
    throw Error(ErrorKind::Precondition,
                "solver input must be trace-normalized, trace is " + std::to_string(t));
  }
  const std::size_t c = a.c();
  return SolverState{a.a,         Matrix::identity(c), a.a, a.a, Matrix(c, c), Matrix(c, c),
                     cfg.mu1,     cfg.mu2,             0};
}

void step_j1(SolverState& state, const SolverConfig& cfg) {
  state.j1 = pipeline::j1_update(state.y, state.l1, state.mu1, cfg.beta1);
}

void step_j2(SolverState& state, const SolverConfig& cfg, const attention::AttentionMap* s) {
  switch (cfg.sparsity_mode) {
    case SparsityMode::Sign:
      state.j2 = pipeline::j2_sign_update(state.y, state.l2, state.j2, state.mu2, cfg.beta2);
      return;
    case SparsityMode::Attention: {
      if (s == nullptr) {
        throw Error(ErrorKind::Configuration, "attention sparsity mode needs an attention map");
      }
      require_same_shape(s->s, state.j2, "attention map");
      const Matrix gate = affine(s->s, -1.0, 1.0);
      state.j2 = pipeline::j2_attention_update(state.y, state.l2, state.j2, gate, state.mu2, cfg.beta2);
      return;
    }
  }
}

void step_y(SolverState& state, const SolverConfig& cfg) {
  const auto& obj = cfg.objectives;
  Matrix y_hat;
  if (obj.low_rank && obj.sparsity) {
    y_hat = pipeline::aggregate_both(state.j1, state.j2, state.l1, state.l2, state.mu1, state.mu2);
  } else if (obj.low_rank) {
    y_hat = pipeline::aggregate_one(state.j1, state.l1, state.mu1);
  } else if (obj.sparsity) {
    y_hat = pipeline::aggregate_one(state.j2, state.l2, state.mu2);
  } else {
    y_hat = state.y;
  }
  for (int inner = 0; inner < cfg.ns_inner; ++inner) {
    auto next = pipeline::newton_schulz_step(inner == 0 ? y_hat : state.y, state.z);
    state.y = std::move(next.y);
    state.z = std::move(next.z);
  }
  check_finite(state.y, "Y", state.iter + 1);
  check_finite(state.z, "Z", state.iter + 1);
}

void step_multipliers(SolverState& state, const SolverConfig& cfg) {
  if (cfg.objectives.low_rank) state.l1 = pipeline::multiplier_update(state.l1, state.j1, state.y, state.mu1);
  if (cfg.objectives.sparsity) state.l2 = pipeline::multiplier_update(state.l2, state.j2, state.y, state.mu2);
  state.mu1 *= cfg.rho;
  state.mu2 *= cfg.rho;
}

double objective(const Matrix& y, const Matrix& a, const SolverConfig& cfg) {
  require_square(y, "objective Y");
  require_same_shape(y, a, "objective");
  if (!is_symmetric(y, 1e-8)) throw Error(ErrorKind::Input, "objective needs a symmetric Y");
  const double fit = frobenius_norm(sub(matmul(y, y), a));
  double value = fit * fit;
  if (cfg.beta1 != 0.0) value += cfg.beta1 * spectral::nuclear_norm(y);
  if (cfg.beta2 != 0.0) value += cfg.beta2 * l1_norm(y);
  return value;
}

TelemetryRecord measure(const SolverState& state, const Matrix& a, const SolverConfig& cfg,
                        const std::vector<double>& taus) {
  TelemetryRecord r;
  r.iter = state.iter;
  const auto ev = spectral::eigenvalues(state.y);
  double nuclear = 0.0;
  for (double l : ev) nuclear += std::abs(l);
  const double fit = frobenius_norm(sub(matmul(state.y, state.y), a));
  r.l1 = l1_norm(state.y);
  r.objective = fit * fit + cfg.beta1 * nuclear + cfg.beta2 * r.l1;
  r.sqrt_residual = fit;
  const double a_norm = frobenius_norm(a);
  r.relative_sqrt_residual = a_norm > 0.0 ? fit / a_norm : fit;
  r.consensus_j1 = frobenius_norm(sub(state.j1, state.y));
  r.consensus_j2 = frobenius_norm(sub(state.j2, state.y));
  for (double tau : taus) {
    int count = 0;
    for (double l : ev) count += l > tau ? 1 : 0;
    r.ranks.push_back(count);
  }
  return r;
}

namespace {

RunResult solve(CovMatrix normalized, double trace_pre, const SolverConfig& cfg,
                std::optional<attention::AttentionMap> attn, const RunOptions& options) {
  if (cfg.sparsity_mode == SparsityMode::Attention && cfg.objectives.sparsity && !attn) {
    throw Error(ErrorKind::Configuration, "attention sparsity mode needs attention params or a vector");
  }
  if (attn && attn->c() != normalized.c()) {
    throw Error(ErrorKind::Dimension, "attention vector length does not match covariance size");
  }
  StepTimes* timer = options.timer;
  const auto started = Clock::now();

  SolverState state = init_state(normalized, cfg);
  Telemetry telemetry{options.taus, {}};
  if (options.telemetry) telemetry.records.push_back(measure(state, normalized.a, cfg, options.taus));

  for (int k = 0; k < cfg.k_iters; ++k) {
    if (cfg.objectives.low_rank) {
      ScopedTime t(slot(timer, &StepTimes::j1));
      step_j1(state, cfg);
      check_finite(state.j1, "J1", k + 1);
    }
    if (cfg.objectives.sparsity) {
      ScopedTime t(slot(timer, &StepTimes::j2));
      step_j2(state, cfg, attn ? &*attn : nullptr);
      check_finite(state.j2, "J2", k + 1);
    }
    {
      ScopedTime t(slot(timer, &StepTimes::y));
      step_y(state, cfg);
    }
    {
      ScopedTime t(slot(timer, &StepTimes::multipliers));
      step_multipliers(state, cfg);
    }
    state.iter = k + 1;
    if (options.telemetry) telemetry.records.push_back(measure(state, normalized.a, cfg, options.taus));
  }

  Matrix y_out;
  switch (cfg.compensation_mode) {
    case CompensationMode::TraceOfInput: y_out = pipeline::compensate(state.y, trace_pre); break;
    case CompensationMode::TraceOfOutput: y_out = pipeline::compensate(state.y, trace(state.y)); break;
    case CompensationMode::None: y_out = state.y; break;
  }
  check_finite(y_out, "compensated Y", cfg.k_iters);
  Descriptor descriptor = upper_triangular(y_out);
  if (timer) timer->total += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - started);

  normalized.trace_pre = trace_pre;
  Matrix y_pre = state.y;
  return RunResult{std::move(y_out), std::move(y_pre), std::move(descriptor), std::move(telemetry),
                   std::move(normalized), std::move(attn), std::move(state)};
}

CovMatrix normalize_input(const Matrix& a, const SolverConfig& cfg, double& trace_pre) {
  Matrix jittered = pipeline::with_jitter(a, cfg.jitter);
  trace_pre = trace(jittered);
  if (!(trace_pre > kDegenerateTrace)) {
    throw Error(ErrorKind::DegenerateInput,
                "covariance trace " + std::to_string(trace_pre) + " is not positive; consider jitter");
  }
  return CovMatrix{pipeline::pre_normalize(jittered, trace_pre), trace_pre};
}

}  // namespace

RunResult run(const FeatureMap& x, const SolverConfig& cfg, const AttentionSource& attn,
              const RunOptions& options) {
  cfg.validate();
  std::optional<attention::AttentionMap> map;
  if (const auto* p = std::get_if<attention::AttentionParams>(&attn)) {
    map = attention::attention_map(attention::channel_attention(x, *p));
  } else if (const auto* v = std::get_if<std::vector<double>>(&attn)) {
    map = attention::attention_map(*v);
  }
  const Matrix a = pipeline::covariance(x.mat(), x.n());
  double trace_pre = 0.0;
  CovMatrix normalized = normalize_input(a, cfg, trace_pre);
  return solve(std::move(normalized), trace_pre, cfg, std::move(map), options);
}

RunResult run(const CovMatrix& a, const SolverConfig& cfg, const AttentionSource& attn,
              const RunOptions& options) {
  cfg.validate();
  require_square(a.a, "covariance");
  require_finite(a.a, "covariance");
  std::optional<attention::AttentionMap> map;
  if (std::holds_alternative<attention::AttentionParams>(attn)) {
    throw Error(ErrorKind::Configuration,
                "attention params need a feature map; inject an attention vector for covariance input");
  }
  if (const auto* v = std::get_if<std::vector<double>>(&attn)) map = attention::attention_map(*v);
  double trace_pre = 0.0;
  CovMatrix normalized = normalize_input(a.a, cfg, trace_pre);
  return solve(std::move(normalized), trace_pre, cfg, std::move(map), options);
}

}  // namespace momn
