#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "momn/attention.hpp"
#include "momn/solver.hpp"

namespace momn::bench {

enum class ExperimentKind { Converge, RankSweep, SparsitySweep, IterSweep, Timing, ToyTrain, Normalize };

const char* to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_kind(const std::string& name);

SparsityMode parse_sparsity(const std::string& name);
const char* to_string(SparsityMode mode) noexcept;
CompensationMode parse_compensation(const std::string& name);
const char* to_string(CompensationMode mode) noexcept;

/// Synthetic SPD input: Q^T diag(lambda) Q, lambda log-spaced in [1/cond, 1].
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t c = 32;
  double cond = 100.0;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

struct ToyTrainSpec {
  std::size_t samples = 100;
  std::size_t n = 16;
  std::size_t c = 4;
  int epochs = 50;
  double learning_rate = 0.5;
  double attention_learning_rate = 0.5;
  double correlation = 0.8;
  bool train_attention = true;

  friend bool operator==(const ToyTrainSpec&, const ToyTrainSpec&) = default;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Converge;
  std::optional<std::string> input_path;  // otherwise synthetic
  std::string input_format = "csv";
  bool input_is_covariance = false;
  SynthSpec synth{};
  SolverConfig config{};
  ToyTrainSpec toy{};
  std::string output_path;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

struct Report {
  nlohmann::json spec;
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> environment;
  std::vector<std::string> notes;

  friend bool operator==(const Report&, const Report&) = default;
};

CovMatrix synth_spd(std::uint64_t seed, std::size_t c, double cond);

/// The spectrum synth_spd plants, descending.
std::vector<double> synth_spectrum(std::size_t c, double cond);

/// Seeded attention vector with entries uniform in [0, 1].
std::vector<double> synth_attention(std::uint64_t seed, std::size_t c);

nlohmann::json config_to_json(const SolverConfig& cfg);
/// Reads flag-named keys (beta1, beta2, mu, mu1, mu2, rho, iters, sparsity,
/// compensation, jitter, ns_inner); absent keys keep the values in `base`.
SolverConfig config_from_json(const nlohmann::json& j, SolverConfig base = {});

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

std::map<std::string, std::string> environment_stamp();

Report run_experiment(const ExperimentSpec& spec);

/// Softmax regression on MOMN descriptors of a two-class synthetic set.
Report toy_train(const ExperimentSpec& spec);

struct ToySample {
  FeatureMap x;
  int label;
};
std::vector<ToySample> toy_dataset(std::uint64_t seed, const ToyTrainSpec& toy);

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Equal-length series as CSV columns (header row first); shorter series are padded blank.
std::string series_csv(const Report& r);

/// Writes the JSON document to `path` and the series CSV next to it (.csv).
void emit_report(const Report& report, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

}  // namespace momn::bench
