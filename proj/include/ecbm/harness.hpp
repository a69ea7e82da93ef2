#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecbm/editor.hpp"
#include "ecbm/model.hpp"
#include "ecbm/trainer.hpp"

namespace ecbm {

struct NoiseConfig {
  EditLevel level = EditLevel::Data;
  double fraction = 0.1;
  double portion = 0.5;  // concept level: share of rows whose chosen concepts are flipped
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::size_t n = 300;
  std::size_t d_i = 10;
  std::size_t k = 8;
  std::size_t d_o = 4;
  double test_fraction = 0.2;
  std::string model = "mlp";  // linear | mlp
  std::vector<std::size_t> hidden{16};
  ConceptLink link = ConceptLink::SigmoidBce;
  LabelLoss label_loss = LabelLoss::SoftmaxCe;
  bool label_bias = true;
  NoiseConfig noise;
  Backend backend = Backend::Exact;
  HTildeMode h_tilde = HTildeMode::Recompute;
  double ridge_alpha = 1e-8;
  CurvatureSite site = CurvatureSite::Target;
  // Empty ("auto") follows the editor default: hessian for linear g, gauss-newton otherwise.
  std::optional<CurvatureMode> concept_curvature = CurvatureMode::Ggn;
  double ekfac_damping_fraction = 0.01;
  TrainConfig training{20000, 1e-2, 1e-6, 1.0, true, 0};
  std::size_t repetitions = 5;
  std::size_t rounds = 10;
  double round_fraction = 0.01;
  ImportanceMetric importance_metric = ImportanceMetric::F1Delta;
  std::size_t top_t = 2;
  std::size_t bottom_t = 2;
  std::string output;
};

void validate(const ScenarioConfig& c);
// Strict: unknown keys are rejected with ConfigError.
ScenarioConfig scenario_from_json(std::string_view text);
std::string scenario_to_json(const ScenarioConfig& c);
// FNV-1a of the canonical config without the output path.
std::uint64_t scenario_hash(const ScenarioConfig& c);
std::string hash_hex(std::uint64_t h);

CbmSpec cbm_spec(const ScenarioConfig& c);
EditOptions edit_options(const ScenarioConfig& c);
TrainConfig train_config(const ScenarioConfig& c, std::uint64_t seed);

struct SynthData {
  Dataset train;
  Dataset test;
};

// x ~ N(0, I); concepts = 1[sigmoid(W_c x + b_c) > 0.5]; y = argmax(W_y (2c - 1)).
SynthData synth_dataset(const ScenarioConfig& c, std::uint64_t seed);

struct NoisyData {
  Dataset data;
  EditRequest correction;
};

NoisyData inject_noise(const Dataset& d, const NoiseConfig& noise, std::uint64_t seed);

struct Metrics {
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct RepetitionRecord {
  std::uint64_t seed = 0;
  Metrics original, noisy, edited, retrained;
  double agreement = 0.0;  // edited vs retrained predictions on the test split
  double concept_relative = 0.0;
  double label_relative = 0.0;
  double edit_seconds = 0.0;
  double retrain_seconds = 0.0;
};

struct RoundRecord {
  std::size_t round = 0;
  Metrics edited, retrained;
  double edit_seconds = 0.0;
  double retrain_seconds = 0.0;
};

struct PeriodicRecord {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
};

struct ImportanceRecord {
  std::uint64_t seed = 0;
  std::vector<ConceptScore> ranking;
  IndexList top, bottom;
  Metrics original;
  Metrics top_edited, top_retrained, bottom_edited, bottom_retrained;
};

struct RunRecord {
  std::string kind;
  ScenarioConfig config;
  std::vector<RepetitionRecord> repetitions;
  std::vector<PeriodicRecord> periodic;
  std::vector<ImportanceRecord> importance;
  std::vector<std::string> failures;
};

RunRecord run_edit_vs_retrain(const ScenarioConfig& c);
RunRecord run_periodic(const ScenarioConfig& c, std::size_t rounds);
RunRecord run_importance(const ScenarioConfig& c, std::size_t top_t, std::size_t bottom_t);

// One JSON line. Wall-times are written only when `timings` is set, so the
// default report is byte-identical across runs.
std::string record_to_json_line(const RunRecord& r, bool timings);

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace ecbm
