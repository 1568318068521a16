#pragma once

// Repo-wide configuration: every module's settings in one JSON document.
// Missing keys keep their defaults; unknown keys are rejected.

#include "mindface/embedding/finetune.hpp"
#include "mindface/eval/ablation.hpp"
#include "mindface/eval/lineup.hpp"
#include "mindface/eval/study.hpp"
#include "mindface/session/session.hpp"
#include "mindface/user/user_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace mindface {

struct PoolConfig {
  int sets_per_category = face::kMaxIterations;
  std::uint64_t seed = 7;
};

struct TripletConfig {
  int participants = 34;  // 300 triplets each
  std::uint64_t seed = 99;
};

struct CalibrationConfig {
  double grid_min = 0.0;
  double grid_max = 1.0;
  double grid_step = 0.02;
  int n_samples = 5000;
  std::uint64_t seed = 31;
  // Reference tau samples come from pairs of synthetic raters.
  std::uint64_t reference_seed = 37;

  std::vector<double> grid() const;
};

struct AlphaCalibrationConfig {
  std::vector<double> grid = {0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1};
  double tolerance = 0.01;
  int n_targets = 200;
  std::uint64_t seed = 41;
};

struct PipelineConfig {
  face::GeneratorConfig generator;
  PoolConfig pools;
  embedding::EmbeddingConfig embedding;
  embedding::OracleConfig oracle;
  embedding::FinetuneConfig finetune;
  TripletConfig triplets;
  user::UserModelConfig user;
  CalibrationConfig calibration;
  recon::ReconConfig recon;
  recon::TrainConfig train;
  AlphaCalibrationConfig alpha;
  session::SessionConfig session;
  eval::StudyConfig study;
  eval::LineupConfig lineup;
  eval::AblationConfig ablation = default_ablation();

  static eval::AblationConfig default_ablation();
  void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& cfg);
// Throws ConfigError on unknown keys, wrong types or invalid values.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace mindface
