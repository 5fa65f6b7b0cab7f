#include "momn/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>

#include "momn/grad.hpp"
#include "momn/random.hpp"
#include "momn/spectral.hpp"
#include "momn/tensor_io.hpp"

namespace momn::bench {

using nlohmann::json;

namespace {

std::string key_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

struct Input {
  std::optional<FeatureMap> x;
  std::optional<CovMatrix> a;

  std::size_t c() const { return x ? x->c() : a->c(); }
};

Input load_input(const ExperimentSpec& spec) {
  if (!spec.input_path) return {std::nullopt, synth_spd(spec.synth.seed, spec.synth.c, spec.synth.cond)};
  Matrix m = io::load_tensor(*spec.input_path, io::parse_format(spec.input_format));
  if (spec.input_is_covariance) return {std::nullopt, make_covariance(std::move(m))};
  return {FeatureMap(std::move(m)), std::nullopt};
}

// Attention source for a run: learned-style params for feature input, a
// seeded vector for covariance input.
AttentionSource attention_for(const Input& in, const ExperimentSpec& spec, const SolverConfig& cfg) {
  if (cfg.sparsity_mode != SparsityMode::Attention) return {};
  if (in.x) return attention::default_params(in.c(), 16, spec.synth.seed);
  return synth_attention(spec.synth.seed, in.c());
}

RunResult run_input(const Input& in, const SolverConfig& cfg, const AttentionSource& attn,
                    const RunOptions& options) {
  return in.x ? run(*in.x, cfg, attn, options) : run(*in.a, cfg, attn, options);
}

void add_telemetry(Report& r, const Telemetry& t) {
  auto& s = r.series;
  for (const auto& rec : t.records) {
    s["iter"].push_back(rec.iter);
    s["objective"].push_back(rec.objective);
    s["sqrt_residual"].push_back(rec.sqrt_residual);
    s["relative_sqrt_residual"].push_back(rec.relative_sqrt_residual);
    s["consensus_j1"].push_back(rec.consensus_j1);
    s["consensus_j2"].push_back(rec.consensus_j2);
    s["l1"].push_back(rec.l1);
    for (std::size_t k = 0; k < t.taus.size(); ++k) {
      s["rank_tau_" + key_number(t.taus[k])].push_back(rec.ranks[k]);
    }
  }
}

Report converge(const ExperimentSpec& spec, const Input& in) {
  Report r;
  const auto result = run_input(in, spec.config, attention_for(in, spec, spec.config), {});
  add_telemetry(r, result.telemetry);
  r.notes.push_back("objective is the layer-local normalization objective on the trace-normalized input");
  return r;
}

Report rank_sweep(const ExperimentSpec& spec, const Input& in) {
  Report r;
  const std::vector<double> taus{0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1};
  r.series["tau"] = taus;
  for (double beta1 : {0.0, 0.25, 0.5}) {
    SolverConfig cfg = spec.config;
    cfg.beta1 = beta1;
    const auto result = run_input(in, cfg, attention_for(in, spec, cfg), {.telemetry = false});
    const auto ev = spectral::eigenvalues(result.y_pre);
    auto& column = r.series["rank_beta1_" + key_number(beta1)];
    for (double tau : taus) {
      column.push_back(static_cast<double>(std::count_if(ev.begin(), ev.end(), [tau](double l) { return l > tau; })));
    }
  }
  r.notes.push_back("ranks count eigenvalues of the pre-compensation output above tau");
  return r;
}

Report sparsity_sweep(const ExperimentSpec& spec, const Input& in) {
  Report r;
  for (double beta2 : {0.0, 0.5, 1.0}) {
    SolverConfig cfg = spec.config;
    cfg.beta2 = beta2;
    const auto result = run_input(in, cfg, attention_for(in, spec, cfg), {.telemetry = false});
    r.series["beta2"].push_back(beta2);
    r.series["l1"].push_back(l1_norm(result.y_pre));
  }
  return r;
}

Report iter_sweep(const ExperimentSpec& spec, const Input& in) {
  Report r;
  for (int k = 1; k <= 10; ++k) {
    SolverConfig cfg = spec.config;
    cfg.k_iters = k;
    RunResult result;
    try {
      result = run_input(in, cfg, attention_for(in, spec, cfg), {.telemetry = false});
    } catch (const Error& e) {
      // Divergence ends the sweep; later K would only repeat the same failure.
      if (e.kind() != ErrorKind::Numeric) throw;
      r.scalars["diverged_at_k"] = k;
      r.notes.push_back(std::string("sweep stopped at K = ") + std::to_string(k) + ": " + e.what());
      break;
    }
    const auto rec = measure(result.state, result.normalized.a, cfg, {});
    r.series["k"].push_back(k);
    r.series["relative_sqrt_residual"].push_back(rec.relative_sqrt_residual);
    r.series["consensus_j1"].push_back(rec.consensus_j1);
    r.series["consensus_j2"].push_back(rec.consensus_j2);
    r.series["l1"].push_back(rec.l1);
  }
  return r;
}

Report timing(const ExperimentSpec& spec, const Input& in) {
  using Clock = std::chrono::steady_clock;
  constexpr int kWarmup = 3;
  constexpr int kRepeats = 31;

  SolverConfig single = spec.config;
  single.beta1 = 0.0;
  single.beta2 = 0.0;
  single.objectives = {false, false};
  SolverConfig two = spec.config;
  two.beta2 = 0.0;
  two.objectives = {true, false};
  SolverConfig three = spec.config;
  three.objectives = {true, true};
  const std::vector<const SolverConfig*> configs{&single, &two, &three};
  const AttentionSource attn3 = attention_for(in, spec, three);

  std::vector<std::vector<double>> ms(3);
  std::vector<double> multiplier_share, j1_share, j2_share, y_share;
  for (int rep = -kWarmup; rep < kRepeats; ++rep) {
    // Interleaved so slow drift affects all three configurations alike.
    for (std::size_t k = 0; k < configs.size(); ++k) {
      StepTimes steps;
      RunOptions options{.telemetry = false, .taus = {}, .timer = k == 2 ? &steps : nullptr};
      const auto start = Clock::now();
      run_input(in, *configs[k], k == 2 ? attn3 : AttentionSource{}, options);
      const double elapsed = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      if (rep < 0) continue;
      ms[k].push_back(elapsed);
      if (k == 2) {
        const double total = static_cast<double>(steps.total.count());
        multiplier_share.push_back(static_cast<double>(steps.multipliers.count()) / total);
        j1_share.push_back(static_cast<double>(steps.j1.count()) / total);
        j2_share.push_back(static_cast<double>(steps.j2.count()) / total);
        y_share.push_back(static_cast<double>(steps.y.count()) / total);
      }
    }
  }
  Report r;
  r.series["objectives"] = {1.0, 2.0, 3.0};
  for (const auto& m : ms) r.series["median_ms"].push_back(median(m));
  r.scalars["median_ms_single"] = median(ms[0]);
  r.scalars["median_ms_two"] = median(ms[1]);
  r.scalars["median_ms_three"] = median(ms[2]);
  r.scalars["multiplier_share"] = median(multiplier_share);
  r.scalars["j1_share"] = median(j1_share);
  r.scalars["j2_share"] = median(j2_share);
  r.scalars["y_share"] = median(y_share);
  r.scalars["repeats"] = kRepeats;
  r.notes.push_back("wall-clock medians are hardware-specific; only their ordering is meaningful");
  return r;
}

Report normalize(const ExperimentSpec& spec, const Input& in) {
  Report r;
  const auto result = run_input(in, spec.config, attention_for(in, spec, spec.config), {});
  r.series["descriptor"] = result.descriptor.values;
  add_telemetry(r, result.telemetry);
  return r;
}

}  // namespace

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Converge: return "converge";
    case ExperimentKind::RankSweep: return "rank";
    case ExperimentKind::SparsitySweep: return "sparsity";
    case ExperimentKind::IterSweep: return "iters";
    case ExperimentKind::Timing: return "timing";
    case ExperimentKind::ToyTrain: return "toytrain";
    case ExperimentKind::Normalize: return "normalize";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Converge, ExperimentKind::RankSweep, ExperimentKind::SparsitySweep,
                 ExperimentKind::IterSweep, ExperimentKind::Timing, ExperimentKind::ToyTrain,
                 ExperimentKind::Normalize}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::Parameter, "unknown experiment kind '" + name + "'");
}

const char* to_string(SparsityMode mode) noexcept {
  return mode == SparsityMode::Sign ? "sign" : "attention";
}

SparsityMode parse_sparsity(const std::string& name) {
  if (name == "sign") return SparsityMode::Sign;
  if (name == "attention") return SparsityMode::Attention;
  throw Error(ErrorKind::Parameter, "unknown sparsity mode '" + name + "' (sign|attention)");
}

const char* to_string(CompensationMode mode) noexcept {
  switch (mode) {
    case CompensationMode::TraceOfInput: return "input-trace";
    case CompensationMode::TraceOfOutput: return "output-trace";
    case CompensationMode::None: return "none";
  }
  return "?";
}

CompensationMode parse_compensation(const std::string& name) {
  if (name == "input-trace") return CompensationMode::TraceOfInput;
  if (name == "output-trace") return CompensationMode::TraceOfOutput;
  if (name == "none") return CompensationMode::None;
  throw Error(ErrorKind::Parameter,
              "unknown compensation '" + name + "' (input-trace|output-trace|none)");
}

std::vector<double> synth_spectrum(std::size_t c, double cond) {
  if (!(std::isfinite(cond) && cond >= 1.0)) {
    throw Error(ErrorKind::Parameter, "condition number must be >= 1");
  }
  if (c == 0) throw Error(ErrorKind::Dimension, "synth_spd needs c >= 1");
  std::vector<double> lambda(c, 1.0);
  for (std::size_t i = 1; i < c; ++i) {
    lambda[i] = std::pow(cond, -static_cast<double>(i) / static_cast<double>(c - 1));
  }
  return lambda;
}

CovMatrix synth_spd(std::uint64_t seed, std::size_t c, double cond) {
  const auto lambda = synth_spectrum(c, cond);
  Rng rng(seed);
  Matrix q(c, c);
  for (double& v : q.data()) v = rng.normal();
  // Modified Gram-Schmidt on the rows, two passes.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < c; ++i) {
      auto ri = q.row(i);
      for (std::size_t j = 0; j < i; ++j) {
        auto rj = q.row(j);
        double d = 0.0;
        for (std::size_t k = 0; k < c; ++k) d += ri[k] * rj[k];
        for (std::size_t k = 0; k < c; ++k) ri[k] -= d * rj[k];
      }
      double norm = 0.0;
      for (double v : ri) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : ri) v /= norm;
    }
  }
  Matrix a = symmetrize(matmul(transpose(q), matmul(Matrix::diag(lambda), q)));
  const double t = trace(a);
  return {std::move(a), t};
}

std::vector<double> synth_attention(std::uint64_t seed, std::size_t c) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> v(c);
  for (double& x : v) x = rng.uniform();
  return v;
}

json config_to_json(const SolverConfig& cfg) {
  return json{{"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"mu1", cfg.mu1},
              {"mu2", cfg.mu2},
              {"rho", cfg.rho},
              {"iters", cfg.k_iters},
              {"sparsity", to_string(cfg.sparsity_mode)},
              {"compensation", to_string(cfg.compensation_mode)},
              {"jitter", cfg.jitter},
              {"ns_inner", cfg.ns_inner},
              {"low_rank_term", cfg.objectives.low_rank},
              {"sparsity_term", cfg.objectives.sparsity},
              {"detach_traces", cfg.detach_traces}};
}

SolverConfig config_from_json(const json& j, SolverConfig cfg) {
  if (!j.is_object()) throw Error(ErrorKind::Input, "config must be a JSON object");
  try {
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("mu")) cfg.mu1 = cfg.mu2 = j.at("mu").get<double>();
    if (j.contains("mu1")) cfg.mu1 = j.at("mu1").get<double>();
    if (j.contains("mu2")) cfg.mu2 = j.at("mu2").get<double>();
    if (j.contains("rho")) cfg.rho = j.at("rho").get<double>();
    if (j.contains("iters")) cfg.k_iters = j.at("iters").get<int>();
    if (j.contains("sparsity")) cfg.sparsity_mode = parse_sparsity(j.at("sparsity").get<std::string>());
    if (j.contains("compensation")) cfg.compensation_mode = parse_compensation(j.at("compensation").get<std::string>());
    if (j.contains("jitter")) cfg.jitter = j.at("jitter").get<double>();
    if (j.contains("ns_inner")) cfg.ns_inner = j.at("ns_inner").get<int>();
    if (j.contains("low_rank_term")) cfg.objectives.low_rank = j.at("low_rank_term").get<bool>();
    if (j.contains("sparsity_term")) cfg.objectives.sparsity = j.at("sparsity_term").get<bool>();
    if (j.contains("detach_traces")) cfg.detach_traces = j.at("detach_traces").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json spec_to_json(const ExperimentSpec& spec) {
  json input = nullptr;
  if (spec.input_path) {
    input = json{{"path", *spec.input_path}, {"format", spec.input_format}, {"covariance", spec.input_is_covariance}};
  }
  const auto& t = spec.toy;
  return json{{"kind", to_string(spec.kind)},
              {"input", input},
              {"synth", {{"seed", spec.synth.seed}, {"c", spec.synth.c}, {"cond", spec.synth.cond}}},
              {"config", config_to_json(spec.config)},
              {"toy",
               {{"samples", t.samples},
                {"n", t.n},
                {"c", t.c},
                {"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"attention_learning_rate", t.attention_learning_rate},
                {"correlation", t.correlation},
                {"train_attention", t.train_attention}}},
              {"output", spec.output_path}};
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec spec;
  try {
    spec.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("input") && !j.at("input").is_null()) {
      const auto& in = j.at("input");
      spec.input_path = in.at("path").get<std::string>();
      spec.input_format = in.value("format", "csv");
      spec.input_is_covariance = in.value("covariance", false);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      spec.synth.seed = s.value("seed", spec.synth.seed);
      spec.synth.c = s.value("c", spec.synth.c);
      spec.synth.cond = s.value("cond", spec.synth.cond);
    }
    if (j.contains("config")) spec.config = config_from_json(j.at("config"));
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      auto& toy = spec.toy;
      toy.samples = t.value("samples", toy.samples);
      toy.n = t.value("n", toy.n);
      toy.c = t.value("c", toy.c);
      toy.epochs = t.value("epochs", toy.epochs);
      toy.learning_rate = t.value("learning_rate", toy.learning_rate);
      toy.attention_learning_rate = t.value("attention_learning_rate", toy.attention_learning_rate);
      toy.correlation = t.value("correlation", toy.correlation);
      toy.train_attention = t.value("train_attention", toy.train_attention);
    }
    spec.output_path = j.value("output", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad experiment spec: ") + e.what());
  }
  return spec;
}

std::map<std::string, std::string> environment_stamp() {
  return {{"version", MOMN_VERSION},
          {"precision", "float64"},
#if defined(__VERSION__)
          {"compiler", __VERSION__},
#else
          {"compiler", "unknown"},
#endif
          {"cxx_standard", std::to_string(__cplusplus)}};
}

Report run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  Report r;
  if (spec.kind == ExperimentKind::ToyTrain) {
    r = toy_train(spec);
  } else {
    const Input in = load_input(spec);
    switch (spec.kind) {
      case ExperimentKind::Converge: r = converge(spec, in); break;
      case ExperimentKind::RankSweep: r = rank_sweep(spec, in); break;
      case ExperimentKind::SparsitySweep: r = sparsity_sweep(spec, in); break;
      case ExperimentKind::IterSweep: r = iter_sweep(spec, in); break;
      case ExperimentKind::Timing: r = timing(spec, in); break;
      case ExperimentKind::Normalize: r = normalize(spec, in); break;
      case ExperimentKind::ToyTrain: break;
    }
  }
  r.spec = spec_to_json(spec);
  r.environment = environment_stamp();
  return r;
}

std::vector<ToySample> toy_dataset(std::uint64_t seed, const ToyTrainSpec& toy) {
  if (toy.c < 2 || toy.c > 8) throw Error(ErrorKind::Parameter, "toy dataset needs 2 <= c <= 8");
  if (toy.samples == 0 || toy.samples > 200) throw Error(ErrorKind::Parameter, "toy dataset needs 1..200 samples");
  if (toy.n < 2) throw Error(ErrorKind::Parameter, "toy dataset needs n >= 2");
  Rng rng(seed);
  std::vector<ToySample> out;
  out.reserve(toy.samples);
  const double r = toy.correlation;
  const double rest = std::sqrt(1.0 - r * r);
  for (std::size_t s = 0; s < toy.samples; ++s) {
    const int label = static_cast<int>(s % 2);
    const double sign = label == 0 ? 1.0 : -1.0;
    Matrix x(toy.n, toy.c);
    for (std::size_t i = 0; i < toy.n; ++i) {
      for (std::size_t j = 0; j < toy.c; ++j) x(i, j) = rng.normal();
      // Channels 0 and 1 are correlated with a class-dependent sign.
      x(i, 1) = sign * r * x(i, 0) + rest * x(i, 1);
    }
    out.push_back({FeatureMap(std::move(x)), label});
  }
  return out;
}

Report toy_train(const ExperimentSpec& spec) {
  const ToyTrainSpec& toy = spec.toy;
  const SolverConfig& cfg = spec.config;
  for (double lr : {toy.learning_rate, toy.attention_learning_rate}) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::Parameter, "learning rates must be positive and finite");
  }
  if (toy.epochs < 1) throw Error(ErrorKind::Parameter, "toy training needs at least one epoch");
  const auto data = toy_dataset(spec.synth.seed, toy);
  const std::size_t c = toy.c;
  const std::size_t m = c * (c + 1) / 2;
  const double inv_n = 1.0 / static_cast<double>(data.size());

  attention::AttentionParams params = attention::default_params(c, 16, spec.synth.seed);
  Matrix w(2, m);
  std::vector<double> bias(2, 0.0);

  Report r;
  auto evaluate_epoch = [&](bool update, int epoch) {
    double ce = 0.0;
    double l_sr = 0.0;
    double mean_s = 0.0;
    int correct = 0;
    Matrix dw(2, m);
    std::vector<double> db(2, 0.0);
    std::optional<attention::AttentionParams> dparams;
    bool finite = true;

    for (const auto& sample : data) {
      grad::TapedRun taped = grad::forward_with_tape(sample.x, cfg, params);
      const auto& d = taped.descriptor.values;
      double logits[2];
      for (int k = 0; k < 2; ++k) {
        logits[k] = bias[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < m; ++i) logits[k] += w(static_cast<std::size_t>(k), i) * d[i];
      }
      const double top = std::max(logits[0], logits[1]);
      const double z = std::exp(logits[0] - top) + std::exp(logits[1] - top);
      double p[2] = {std::exp(logits[0] - top) / z, std::exp(logits[1] - top) / z};
      ce -= std::log(std::max(p[sample.label], 1e-300)) * inv_n;
      correct += (logits[1] > logits[0] ? 1 : 0) == sample.label ? 1 : 0;

      const Matrix& s = taped.tape.node(taped.tape.attention_s).value;
      double s_sum = 0.0;
      for (double v : s.data()) s_sum += v;
      const double s_mean = s_sum / static_cast<double>(c * c);
      mean_s += s_mean * inv_n;
      l_sr += cfg.beta2 * s_mean * inv_n;

      if (!update) continue;
      double dlogits[2] = {(p[0] - (sample.label == 0 ? 1.0 : 0.0)) * inv_n,
                           (p[1] - (sample.label == 1 ? 1.0 : 0.0)) * inv_n};
      std::vector<double> d_desc(m, 0.0);
      for (int k = 0; k < 2; ++k) {
        db[static_cast<std::size_t>(k)] += dlogits[k];
        for (std::size_t i = 0; i < m; ++i) {
          dw(static_cast<std::size_t>(k), i) += dlogits[k] * d[i];
          d_desc[i] += w(static_cast<std::size_t>(k), i) * dlogits[k];
        }
      }
      const Matrix d_s(c, c, cfg.beta2 * inv_n / static_cast<double>(c * c));
      auto g = grad::backward(taped.tape, d_desc, &d_s);
      finite = finite && g.dx.all_finite();
      if (!dparams) {
        dparams = std::move(g.dparams);
      } else {
        dparams->w1 = add(dparams->w1, g.dparams->w1);
        dparams->w2 = add(dparams->w2, g.dparams->w2);
        for (std::size_t i = 0; i < c; ++i) dparams->b2[i] += g.dparams->b2[i];
        for (std::size_t i = 0; i < dparams->b1.size(); ++i) dparams->b1[i] += g.dparams->b1[i];
      }
    }
    const double loss = ce + l_sr;
    if (!std::isfinite(loss)) throw Error(ErrorKind::Numeric, "toy training loss is not finite", epoch);
    const double accuracy = static_cast<double>(correct) * inv_n;
    if (!update) return std::array<double, 5>{loss, ce, l_sr, accuracy, mean_s};

    finite = finite && dw.all_finite() && dparams && dparams->w1.all_finite() && dparams->w2.all_finite();
    for (double v : dparams->b1) finite = finite && std::isfinite(v);
    for (double v : dparams->b2) finite = finite && std::isfinite(v);
    r.series["epoch"].push_back(epoch);
    r.series["loss"].push_back(loss);
    r.series["ce"].push_back(ce);
    r.series["l_sr"].push_back(l_sr);
    r.series["accuracy"].push_back(accuracy);
    r.series["mean_s"].push_back(mean_s);
    r.series["grad_finite"].push_back(finite ? 1.0 : 0.0);
    if (!finite) throw Error(ErrorKind::Numeric, "non-finite gradient during toy training", epoch);

    w = sub(w, scale(dw, toy.learning_rate));
    for (int k = 0; k < 2; ++k) bias[static_cast<std::size_t>(k)] -= toy.learning_rate * db[static_cast<std::size_t>(k)];
    if (toy.train_attention) {
      const double lr = toy.attention_learning_rate;
      params.w1 = sub(params.w1, scale(dparams->w1, lr));
      params.w2 = sub(params.w2, scale(dparams->w2, lr));
      for (std::size_t i = 0; i < params.b1.size(); ++i) params.b1[i] -= lr * dparams->b1[i];
      for (std::size_t i = 0; i < c; ++i) params.b2[i] -= lr * dparams->b2[i];
    }
    return std::array<double, 5>{loss, ce, l_sr, accuracy, mean_s};
  };

  for (int epoch = 1; epoch <= toy.epochs; ++epoch) evaluate_epoch(true, epoch);
  const auto final_metrics = evaluate_epoch(false, toy.epochs + 1);
  r.scalars["final_loss"] = final_metrics[0];
  r.scalars["final_accuracy"] = final_metrics[3];
  r.scalars["final_mean_s"] = final_metrics[4];
  r.notes.push_back("loss = softmax cross-entropy + beta2 * mean(S); full-batch gradient descent");
  return r;
}

namespace {

// JSON has no non-finite numbers, so they travel as "inf", "-inf" and "nan".
json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::Input, "bad report document: '" + s + "' is not a number");
  }
  return j.get<double>();
}

}  // namespace

json report_to_json(const Report& r) {
  json series = json::object();
  for (const auto& [k, v] : r.series) {
    json column = json::array();
    for (double x : v) column.push_back(number_to_json(x));
    series[k] = std::move(column);
  }
  json scalars = json::object();
  for (const auto& [k, v] : r.scalars) scalars[k] = number_to_json(v);
  json env = json::object();
  for (const auto& [k, v] : r.environment) env[k] = v;
  return json{{"spec", r.spec}, {"series", series}, {"scalars", scalars}, {"environment", env}, {"notes", r.notes}};
}

Report report_from_json(const json& j) {
  Report r;
  try {
    r.spec = j.at("spec");
    for (const auto& [k, v] : j.at("series").items()) {
      auto& column = r.series[k];
      for (const auto& x : v) column.push_back(number_from_json(x));
    }
    if (j.contains("scalars"))
      for (const auto& [k, v] : j.at("scalars").items()) r.scalars[k] = number_from_json(v);
    for (const auto& [k, v] : j.at("environment").items()) r.environment[k] = v.get<std::string>();
    if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("bad report document: ") + e.what());
  }
  return r;
}

std::string series_csv(const Report& r) {
  std::string out;
  std::size_t rows = 0;
  bool first = true;
  for (const auto& [name, values] : r.series) {
    if (!first) out.push_back(',');
    out += name;
    first = false;
    rows = std::max(rows, values.size());
  }
  out.push_back('\n');
  char buf[32];
  for (std::size_t i = 0; i < rows; ++i) {
    first = true;
    for (const auto& [name, values] : r.series) {
      if (!first) out.push_back(',');
      first = false;
      if (i < values.size()) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), values[i]);
        out.append(buf, ptr);
      }
    }
    out.push_back('\n');
  }
  return out;
}

void emit_report(const Report& report, const std::filesystem::path& path) {
  io::write_text(path, report_to_json(report).dump(2) + "\n");
  std::filesystem::path csv = path;
  csv.replace_extension(".csv");
  if (csv != path) io::write_text(csv, series_csv(report));
}

Report load_report(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Input, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace momn::bench
