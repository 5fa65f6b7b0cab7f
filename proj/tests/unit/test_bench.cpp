#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "momn/bench.hpp"
#include "momn/spectral.hpp"
#include "momn/tensor_io.hpp"
#include "test_util.hpp"

using namespace momn;
using namespace momn::bench;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "momn_test_bench";
  fs::create_directories(dir);
  return dir / name;
}

ExperimentSpec synth_spec(ExperimentKind kind, std::uint64_t seed, std::size_t c, double cond) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.synth = {seed, c, cond};
  return spec;
}

}  // namespace

TEST_SUITE("synth_spd") {
  TEST_CASE("cond = 1 gives equal eigenvalues") {
    const auto a = synth_spd(3, 6, 1.0);
    for (double l : spectral::eigenvalues(a.a)) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("property: planted spectrum is recovered within 1e-9") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t c = 2 + seed * 3;
      const double cond = std::pow(10.0, 0.3 * static_cast<double>(seed));
      const auto a = synth_spd(seed, c, cond);
      const auto ev = spectral::eigenvalues(a.a);
      const auto planted = synth_spectrum(c, cond);
      for (std::size_t i = 0; i < c; ++i) CHECK(std::abs(ev[i] - planted[i]) <= 1e-9);
      CHECK(planted.front() == 1.0);
      CHECK(planted.back() == doctest::Approx(1.0 / cond).epsilon(1e-12));
      CHECK(a.a == transpose(a.a));
    }
  }

  TEST_CASE("same seed twice is bit-equal") {
    CHECK(synth_spd(9, 16, 100).a == synth_spd(9, 16, 100).a);
    CHECK_FALSE(synth_spd(9, 16, 100).a == synth_spd(10, 16, 100).a);
  }

  TEST_CASE("cond < 1 is a parameter error") {
    CHECK(kind_of([] { synth_spd(0, 4, 0.5); }) == ErrorKind::Parameter);
  }

  TEST_CASE("seeded attention vector") {
    const auto v = synth_attention(4, 10);
    CHECK(v == synth_attention(4, 10));
    for (double x : v) {
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_SUITE("names") {
  TEST_CASE("round trips and errors") {
    for (auto k : {ExperimentKind::Converge, ExperimentKind::RankSweep, ExperimentKind::SparsitySweep,
                   ExperimentKind::IterSweep, ExperimentKind::Timing, ExperimentKind::ToyTrain,
                   ExperimentKind::Normalize}) {
      CHECK(parse_kind(to_string(k)) == k);
    }
    CHECK(parse_sparsity("attention") == SparsityMode::Attention);
    CHECK(parse_compensation("output-trace") == CompensationMode::TraceOfOutput);
    CHECK(kind_of([] { parse_kind("bogus"); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { parse_sparsity("l0"); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { parse_compensation("x"); }) == ErrorKind::Parameter);
  }
}

TEST_SUITE("config json") {
  TEST_CASE("round trip and partial override") {
    SolverConfig cfg;
    cfg.beta1 = 0.25;
    cfg.sparsity_mode = SparsityMode::Attention;
    cfg.compensation_mode = CompensationMode::None;
    cfg.objectives.low_rank = false;
    CHECK(config_from_json(config_to_json(cfg)) == cfg);
    const auto partial = config_from_json(nlohmann::json{{"mu", 4.0}, {"iters", 7}});
    CHECK(partial.mu1 == 4.0);
    CHECK(partial.mu2 == 4.0);
    CHECK(partial.k_iters == 7);
    CHECK(partial.beta1 == 0.5);
  }

  TEST_CASE("bad values") {
    CHECK(kind_of([] { config_from_json(nlohmann::json{{"beta1", "x"}}); }) == ErrorKind::Input);
    CHECK(kind_of([] { config_from_json(nlohmann::json{{"rho", 0.9}}); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { config_from_json(nlohmann::json::array()); }) == ErrorKind::Input);
  }

  TEST_CASE("spec round trip") {
    ExperimentSpec spec = synth_spec(ExperimentKind::ToyTrain, 17, 12, 30);
    spec.toy.epochs = 3;
    spec.config.beta2 = 0.5;
    spec.output_path = "out.json";
    CHECK(spec_from_json(spec_to_json(spec)) == spec);
    spec.input_path = "x.bin";
    spec.input_format = "bin";
    spec.input_is_covariance = true;
    CHECK(spec_from_json(spec_to_json(spec)) == spec);
  }
}

TEST_SUITE("run_experiment") {
  TEST_CASE("converge: K + 1 rows of objective and residual") {
    const auto r = run_experiment(synth_spec(ExperimentKind::Converge, 1, 16, 100));
    CHECK(r.series.at("objective").size() == 6);
    CHECK(r.series.at("relative_sqrt_residual").size() == 6);
    CHECK(r.series.at("rank_tau_0.04").size() == 6);
    CHECK(r.spec.at("kind") == "converge");
    CHECK_FALSE(r.notes.empty());
  }

  TEST_CASE("rank sweep on synth_spd(7, 32, 100): beta1 = 0.5 strictly below beta1 = 0 at tau = 0.04") {
    const auto r = run_experiment(synth_spec(ExperimentKind::RankSweep, 7, 32, 100));
    const auto& tau = r.series.at("tau");
    const auto idx = static_cast<std::size_t>(std::find(tau.begin(), tau.end(), 0.04) - tau.begin());
    REQUIRE(idx < tau.size());
    CHECK(r.series.at("rank_beta1_0.5")[idx] < r.series.at("rank_beta1_0")[idx]);
    for (const char* key : {"rank_beta1_0", "rank_beta1_0.25", "rank_beta1_0.5"}) {
      const auto& ranks = r.series.at(key);
      for (std::size_t i = 1; i < ranks.size(); ++i) CHECK(ranks[i] <= ranks[i - 1]);
    }
  }

  TEST_CASE("sparsity sweep: l1 non-increasing in beta2 (attention mode)") {
    auto spec = synth_spec(ExperimentKind::SparsitySweep, 7, 32, 100);
    spec.config.sparsity_mode = SparsityMode::Attention;
    const auto r = run_experiment(spec);
    const auto& l1 = r.series.at("l1");
    REQUIRE(l1.size() == 3);
    CHECK(l1[1] <= l1[0]);
    CHECK(l1[2] <= l1[1]);
  }

  TEST_CASE("iteration sweep covers K = 1..10") {
    auto spec = synth_spec(ExperimentKind::IterSweep, 2, 8, 100);
    spec.config.sparsity_mode = SparsityMode::Attention;
    const auto r = run_experiment(spec);
    CHECK(r.series.at("k").size() == 10);
    CHECK(r.series.at("k").back() == 10);
    CHECK(r.scalars.count("diverged_at_k") == 0);
  }

  TEST_CASE("iteration sweep stops at the first divergent K and says so") {
    const auto r = run_experiment(synth_spec(ExperimentKind::IterSweep, 3, 16, 100));
    REQUIRE(r.scalars.count("diverged_at_k") == 1);
    const double k = r.scalars.at("diverged_at_k");
    CHECK(r.series.at("k").size() == static_cast<std::size_t>(k) - 1);
    CHECK(r.notes.back().find("numeric-error") != std::string::npos);
  }

  TEST_CASE("timing: single-objective median below three-objective median") {
    auto spec = synth_spec(ExperimentKind::Timing, 0, 64, 100);
    spec.config.sparsity_mode = SparsityMode::Attention;
    const auto r = run_experiment(spec);
    CHECK(r.scalars.at("median_ms_single") < r.scalars.at("median_ms_three"));
    CHECK(r.scalars.at("multiplier_share") > 0.0);
    CHECK(r.scalars.at("multiplier_share") < 1.0);
  }

  TEST_CASE("normalize from files: feature map and covariance") {
    const Matrix x = momn::test::random_matrix(4, 12, 5);
    const fs::path px = temp_path("x.csv");
    io::save_tensor(px, x, io::Format::Csv);
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Normalize;
    spec.input_path = px.string();
    const auto r = run_experiment(spec);
    CHECK(r.series.at("descriptor") == run(FeatureMap(x), {}).descriptor.values);

    const fs::path pa = temp_path("a.bin");
    io::save_tensor(pa, build_covariance(FeatureMap(x)).a, io::Format::Bin);
    spec.input_path = pa.string();
    spec.input_format = "bin";
    spec.input_is_covariance = true;
    CHECK(run_experiment(spec).series.at("descriptor") == r.series.at("descriptor"));
  }

  TEST_CASE("errors propagate") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Normalize;
    spec.input_path = "/nonexistent.csv";
    CHECK(kind_of([&] { run_experiment(spec); }) == ErrorKind::Io);
    auto bad = synth_spec(ExperimentKind::Converge, 0, 8, 0.1);
    CHECK(kind_of([&] { run_experiment(bad); }) == ErrorKind::Parameter);
  }
}

TEST_SUITE("determinism") {
  TEST_CASE("property: every non-timing experiment reproduces from its embedded spec") {
    std::vector<ExperimentSpec> specs{synth_spec(ExperimentKind::Converge, 3, 16, 100),
                                      synth_spec(ExperimentKind::RankSweep, 3, 16, 100),
                                      synth_spec(ExperimentKind::SparsitySweep, 3, 16, 100),
                                      synth_spec(ExperimentKind::IterSweep, 3, 16, 100)};
    ExperimentSpec toy = synth_spec(ExperimentKind::ToyTrain, 3, 16, 100);
    toy.config.sparsity_mode = SparsityMode::Attention;
    toy.toy.epochs = 5;
    toy.toy.samples = 20;
    specs.push_back(toy);
    for (const auto& spec : specs) {
      const Report r1 = run_experiment(spec);
      const Report r2 = run_experiment(spec_from_json(r1.spec));
      CHECK(r1 == r2);
      CHECK(report_to_json(r1).dump() == report_to_json(r2).dump());
    }
  }
}

TEST_SUITE("toy_train") {
  ExperimentSpec toy_spec() {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::ToyTrain;
    spec.synth.seed = 0;
    spec.config.sparsity_mode = SparsityMode::Attention;
    return spec;
  }

  TEST_CASE("dataset shape and labels") {
    const auto data = toy_dataset(1, {});
    CHECK(data.size() == 100);
    CHECK(data[0].x.n() == 16);
    CHECK(data[0].x.c() == 4);
    CHECK(data[0].label == 0);
    CHECK(data[1].label == 1);
    ToyTrainSpec bad;
    bad.c = 9;
    CHECK(kind_of([&] { toy_dataset(1, bad); }) == ErrorKind::Parameter);
    bad = {};
    bad.samples = 201;
    CHECK(kind_of([&] { toy_dataset(1, bad); }) == ErrorKind::Parameter);
  }

  TEST_CASE("the set is separable on exact square-root features") {
    const auto data = toy_dataset(0, {});
    std::vector<std::vector<double>> feats;
    for (const auto& s : data) {
      feats.push_back(upper_triangular(spectral::spectral_sqrt(build_covariance(s.x).a)).values);
    }
    const std::size_t m = feats[0].size();
    std::vector<double> w(m, 0.0);
    double b = 0.0;
    // Logistic regression, equivalent to two-class softmax.
    for (int epoch = 0; epoch < 200; ++epoch) {
      std::vector<double> gw(m, 0.0);
      double gb = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        double z = b;
        for (std::size_t k = 0; k < m; ++k) z += w[k] * feats[i][k];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double d = (p - data[i].label) / static_cast<double>(data.size());
        for (std::size_t k = 0; k < m; ++k) gw[k] += d * feats[i][k];
        gb += d;
      }
      for (std::size_t k = 0; k < m; ++k) w[k] -= 1.0 * gw[k];
      b -= 1.0 * gb;
    }
    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double z = b;
      for (std::size_t k = 0; k < m; ++k) z += w[k] * feats[i][k];
      correct += (z > 0.0 ? 1 : 0) == data[i].label;
    }
    CHECK(correct >= 95);
  }

  TEST_CASE("reaches 0.95 accuracy by epoch 50 with finite gradients and falling loss") {
    const auto r = toy_train(toy_spec());
    const auto& loss = r.series.at("loss");
    REQUIRE(loss.size() == 50);
    CHECK(loss.back() < loss.front());
    CHECK(r.scalars.at("final_accuracy") >= 0.95);
    for (double f : r.series.at("grad_finite")) CHECK(f == 1.0);
  }

  TEST_CASE("the sparsity loss lowers mean(S) relative to frozen attention") {
    auto spec = toy_spec();
    const auto trained = toy_train(spec);
    spec.toy.train_attention = false;
    const auto frozen = toy_train(spec);
    CHECK(trained.series.at("mean_s").back() < frozen.series.at("mean_s").back());
    CHECK(frozen.series.at("mean_s").back() == frozen.series.at("mean_s").front());
  }

  TEST_CASE("beta2 = 0 contributes exactly zero") {
    auto spec = toy_spec();
    spec.config.beta2 = 0.0;
    spec.toy.epochs = 5;
    const auto r = toy_train(spec);
    for (double v : r.series.at("l_sr")) CHECK(v == 0.0);
    CHECK(r.series.at("loss") == r.series.at("ce"));
  }

  TEST_CASE("huge learning rates saturate instead of diverging; bad rates are rejected") {
    auto spec = toy_spec();
    spec.toy.epochs = 3;
    spec.toy.learning_rate = 1e300;
    const auto r = toy_train(spec);
    CHECK(std::isfinite(r.scalars.at("final_loss")));
    spec.toy.learning_rate = 0.0;
    CHECK(kind_of([&] { toy_train(spec); }) == ErrorKind::Parameter);
    spec.toy.learning_rate = std::numeric_limits<double>::infinity();
    CHECK(kind_of([&] { toy_train(spec); }) == ErrorKind::Parameter);
    spec.toy.learning_rate = 0.5;
    spec.toy.epochs = 0;
    CHECK(kind_of([&] { toy_train(spec); }) == ErrorKind::Parameter);
  }
}

TEST_SUITE("reports") {
  TEST_CASE("emit and load round trip, CSV sidecar, environment stamp") {
    const auto r = run_experiment(synth_spec(ExperimentKind::Converge, 5, 12, 100));
    const fs::path p = temp_path("converge.json");
    emit_report(r, p);
    CHECK(load_report(p) == r);
    const std::string csv = io::read_text(temp_path("converge.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6);
    CHECK(csv.rfind("consensus_j1,", 0) == 0);
    CHECK_FALSE(r.environment.empty());
    CHECK(r.environment.at("precision") == "float64");
    CHECK_FALSE(r.environment.at("version").empty());
  }

  TEST_CASE("non-finite values survive the round trip") {
    Report r;
    r.series["x"] = {1.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::quiet_NaN()};
    r.scalars["s"] = std::numeric_limits<double>::quiet_NaN();
    const auto j = report_to_json(r);
    CHECK(j.at("series").at("x")[1] == "inf");
    const auto back = report_from_json(j);
    CHECK(back.series.at("x")[0] == 1.0);
    CHECK(back.series.at("x")[1] == std::numeric_limits<double>::infinity());
    CHECK(back.series.at("x")[2] == -std::numeric_limits<double>::infinity());
    CHECK(std::isnan(back.series.at("x")[3]));
    CHECK(std::isnan(back.scalars.at("s")));
    auto bad = j;
    bad["series"]["x"][0] = "many";
    CHECK(kind_of([&] { report_from_json(bad); }) == ErrorKind::Input);
  }

  TEST_CASE("document has the top-level keys") {
    const auto j = report_to_json(run_experiment(synth_spec(ExperimentKind::IterSweep, 5, 6, 10)));
    CHECK(j.contains("spec"));
    CHECK(j.contains("series"));
    CHECK(j.contains("environment"));
  }

  TEST_CASE("io failure") {
    CHECK(kind_of([] { emit_report({}, "/nonexistent/dir/r.json"); }) == ErrorKind::Io);
    const fs::path p = temp_path("garbage.json");
    io::write_text(p, "{not json");
    CHECK(kind_of([&] { load_report(p); }) == ErrorKind::Input);
  }
}
