#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "momn/bench.hpp"
#include "momn/grad.hpp"
#include "momn/random.hpp"
#include "momn/tensor_io.hpp"

namespace {

using namespace momn;
using nlohmann::json;

// Solver flags shared by all subcommands; only flags given on the command
// line override values from --config.
struct ConfigFlags {
  std::string config_path;
  std::optional<double> beta1, beta2, mu, rho, jitter;
  std::optional<int> iters;
  std::optional<std::string> sparsity, compensation;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (same keys as the flags)");
    app->add_option("--beta1", beta1, "low-rank weight");
    app->add_option("--beta2", beta2, "sparsity weight");
    app->add_option("--mu", mu, "initial penalty for both multipliers");
    app->add_option("--rho", rho, "penalty growth factor");
    app->add_option("--iters", iters, "solver iterations K");
    app->add_option("--jitter", jitter, "diagonal jitter added before pre-normalization");
    app->add_option("--sparsity", sparsity, "sign|attention");
    app->add_option("--compensation", compensation, "input-trace|output-trace|none");
  }

  SolverConfig resolve(SolverConfig cfg) const {
    if (!config_path.empty()) {
      json j;
      try {
        j = json::parse(io::read_text(config_path));
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Input, config_path + ": " + e.what());
      }
      cfg = bench::config_from_json(j, cfg);
    }
    if (beta1) cfg.beta1 = *beta1;
    if (beta2) cfg.beta2 = *beta2;
    if (mu) cfg.mu1 = cfg.mu2 = *mu;
    if (rho) cfg.rho = *rho;
    if (iters) cfg.k_iters = *iters;
    if (jitter) cfg.jitter = *jitter;
    if (sparsity) cfg.sparsity_mode = bench::parse_sparsity(*sparsity);
    if (compensation) cfg.compensation_mode = bench::parse_compensation(*compensation);
    cfg.validate();
    return cfg;
  }
};

void write_report(const bench::Report& report, const std::string& out) {
  if (out.empty()) {
    std::cout << bench::report_to_json(report).dump(2) << "\n";
  } else {
    bench::emit_report(report, out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective matrix normalization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MOMN_VERSION));

  ConfigFlags norm_flags;
  std::string norm_input, norm_format = "csv", norm_out;
  bool norm_covariance = false;
  auto* normalize = app.add_subcommand("normalize", "normalize one feature map or covariance");
  normalize->add_option("--input", norm_input, "feature map (n x c) or covariance file")->required();
  normalize->add_option("--format", norm_format, "csv|bin")->check(CLI::IsMember({"csv", "bin"}));
  normalize->add_flag("--covariance", norm_covariance, "input is already a c x c covariance");
  normalize->add_option("--out", norm_out, "report path (JSON; series CSV written alongside)");
  norm_flags.attach(normalize);

  ConfigFlags bench_flags;
  std::string bench_kind = "converge", bench_out;
  bench::SynthSpec synth;
  std::optional<std::size_t> bench_c;
  std::optional<int> bench_epochs;
  auto* bench_cmd = app.add_subcommand("bench", "run a seeded experiment");
  bench_cmd->add_option("--kind", bench_kind, "converge|rank|sparsity|iters|timing|toytrain")
      ->check(CLI::IsMember({"converge", "rank", "sparsity", "iters", "timing", "toytrain"}));
  bench_cmd->add_option("--seed", synth.seed, "generator seed");
  bench_cmd->add_option("--c", bench_c, "channels (default 32, toytrain 4)");
  bench_cmd->add_option("--cond", synth.cond, "condition number of the synthetic input");
  bench_cmd->add_option("--epochs", bench_epochs, "toytrain epochs");
  bench_cmd->add_option("--out", bench_out, "report path (JSON; series CSV written alongside)");
  bench_flags.attach(bench_cmd);

  ConfigFlags gc_flags;
  std::uint64_t gc_seed = 0;
  std::size_t gc_c = 6, gc_n = 8;
  double gc_tol = 1e-5;
  std::string gc_out;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare backward with finite differences");
  gradcheck->add_option("--seed", gc_seed, "seed for the random feature map");
  gradcheck->add_option("--c", gc_c, "channels (<= 8)");
  gradcheck->add_option("--n", gc_n, "positions (<= 16)");
  gradcheck->add_option("--tol", gc_tol, "relative error tolerance");
  gradcheck->add_option("--out", gc_out, "write the per-entry table as JSON");
  gc_flags.attach(gradcheck);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*normalize) {
      bench::ExperimentSpec spec;
      spec.kind = bench::ExperimentKind::Normalize;
      spec.input_path = norm_input;
      spec.input_format = norm_format;
      spec.input_is_covariance = norm_covariance;
      spec.config = norm_flags.resolve({});
      spec.output_path = norm_out;
      write_report(bench::run_experiment(spec), norm_out);
    } else if (*bench_cmd) {
      bench::ExperimentSpec spec;
      spec.kind = bench::parse_kind(bench_kind);
      spec.synth = synth;
      SolverConfig base;
      if (spec.kind == bench::ExperimentKind::ToyTrain) {
        base.sparsity_mode = SparsityMode::Attention;
        if (bench_c) spec.toy.c = *bench_c;
        if (bench_epochs) spec.toy.epochs = *bench_epochs;
      } else if (bench_c) {
        spec.synth.c = *bench_c;
      }
      spec.config = bench_flags.resolve(base);
      spec.output_path = bench_out;
      write_report(bench::run_experiment(spec), bench_out);
    } else if (*gradcheck) {
      if (gc_c < 1 || gc_c > 8 || gc_n < 2 || gc_n > 16) {
        throw Error(ErrorKind::Parameter, "gradcheck needs 1 <= c <= 8 and 2 <= n <= 16");
      }
      const SolverConfig cfg = gc_flags.resolve({});
      Rng rng(gc_seed);
      Matrix x(gc_n, gc_c);
      for (double& v : x.data()) v = rng.normal();
      AttentionSource attn;
      if (cfg.sparsity_mode == SparsityMode::Attention) attn = attention::default_params(gc_c, 16, gc_seed);
      const auto report = grad::grad_check(FeatureMap(std::move(x)), cfg, attn, gc_tol);
      if (!report.error.empty()) throw Error(ErrorKind::Numeric, report.error);
      if (!gc_out.empty()) {
        json entries = json::array();
        for (const auto& e : report.entries) {
          entries.push_back({{"tensor", e.tensor}, {"i", e.i}, {"j", e.j}, {"analytic", e.analytic},
                             {"numeric", e.numeric}, {"rel_error", e.rel_error}, {"excluded", e.excluded}});
        }
        io::write_text(gc_out, json{{"max_rel_error", report.max_rel_error},
                                    {"tolerance", report.tolerance},
                                    {"min_sign_margin", report.min_sign_margin},
                                    {"excluded", report.excluded},
                                    {"pass", report.pass},
                                    {"entries", entries}}
                                   .dump(2) + "\n");
      }
      std::printf("%s max_rel_error=%.3e tol=%.1e entries=%zu excluded=%zu min_sign_margin=%.3e\n",
                  report.pass ? "PASS" : "FAIL", report.max_rel_error, report.tolerance,
                  report.entries.size(), report.excluded, report.min_sign_margin);
      return report.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "momn: %s\n", e.what());
    return 2;
  }
  return 0;
}
