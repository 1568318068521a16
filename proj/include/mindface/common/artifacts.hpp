#pragma once

// Trained-model directory shared by the CLI, the service and the studies:
//   pools.json                      auxiliary sets (latents)
//   embedding_base.{json,bin}       base embedding net
//   embedding_tuned.{json,bin}      fine-tuned embedding net
//   reconstructor.{json,bin}        reconstruction net; config echo holds
//                                   the calibrated early-stop alpha
//   train_log.csv, alpha_calibration.json

#include "mindface/common/config.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace mindface {

struct Artifacts {
  face::Generator generator;
  face::AuxiliaryPools pools;
  embedding::EmbeddingNet base_embedder;
  embedding::EmbeddingNet tuned_embedder;
  recon::ReconstructionNet reconstructor;
  double alpha = 0.1;  // calibrated early-stop threshold

  // Fine-tuned embeddings drive the user model, the loss and the metric.
  recon::SimulationWorld world(const embedding::OracleConfig& rater) const;
};

using ProgressFn = std::function<void(const std::string&)>;

struct EmbeddingStageReport {
  embedding::FinetuneResult finetune;
  std::size_t n_triplets = 0;
  double base_satisfaction = 0.0;   // held-out triplets
  double tuned_satisfaction = 0.0;
};

// Builds the pools and both embedding nets and writes them to `dir`.
EmbeddingStageReport run_embedding_stage(const PipelineConfig& cfg, const std::filesystem::path& dir,
                                         const ProgressFn& progress = {});

struct ReconstructionStageReport {
  recon::TrainResult train;
  eval::AlphaCalibration alpha;
};

// Trains the reconstruction net on the stored embedding stage, calibrates
// alpha on fresh rater-ranked targets and writes everything to `dir`.
ReconstructionStageReport run_reconstruction_stage(const PipelineConfig& cfg,
                                                   const std::filesystem::path& dir,
                                                   const ProgressFn& progress = {});

// Throws NotFound when a checkpoint is missing.
Artifacts load_embedding_stage(const PipelineConfig& cfg, const std::filesystem::path& dir);
Artifacts load_artifacts(const PipelineConfig& cfg, const std::filesystem::path& dir);

bool has_embedding_stage(const std::filesystem::path& dir);
bool has_reconstruction_stage(const std::filesystem::path& dir);

// Checkpoint helpers for the two network types.
void save_embedding(const embedding::EmbeddingNet& net, const std::filesystem::path& stem);
embedding::EmbeddingNet load_embedding(const std::filesystem::path& stem);
void save_reconstructor(const recon::ReconstructionNet& net, double alpha, const std::filesystem::path& stem);
recon::ReconstructionNet load_reconstructor(const std::filesystem::path& stem, double* alpha = nullptr);

}  // namespace mindface
