#pragma once

// Ablation suite: four cumulative training configurations evaluated with
// one shared validation metric.

#include "mindface/eval/study.hpp"

#include <string>
#include <vector>

namespace mindface::eval {

struct AblationConfig {
  recon::TrainConfig train;  // sigma and variable_iterations are set per variant
  double num_sigma = 0.22;   // user-model noise of the +NUM variant

  void validate() const;
};

struct AblationVariant {
  std::string label;
  recon::TrainConfig train;
  bool tuned_embedding = false;  // user model and loss use the fine-tuned net
};

// baseline (sigma 0, base embeddings, fixed 20 iterations), +TE, +VI, +NUM;
// each adds one component to the previous one.
std::vector<AblationVariant> ablation_variants(const AblationConfig& cfg);

struct AblationResult {
  std::string label;
  std::vector<recon::TrainLogRow> log;
  double peak_val_similarity = 0.0;
  int peak_step = 0;
  double final_val_similarity = 0.0;
};

struct AblationWorld {
  const face::Generator* generator = nullptr;
  const face::AuxiliaryPools* pools = nullptr;
  const embedding::EmbeddingNet* base_embedder = nullptr;
  const embedding::EmbeddingNet* tuned_embedder = nullptr;  // also the validation metric
  embedding::OracleConfig rater;
};

AblationResult summarise_log(const std::string& label, const std::vector<recon::TrainLogRow>& log);

std::vector<AblationResult> ablation_suite(const recon::ReconConfig& net_cfg, const AblationConfig& cfg,
                                           const AblationWorld& world);

// Validation peak followed by a decline of at least `min_drop` while the
// training-subset similarity still improves after the peak.
bool shows_overfitting(const std::vector<recon::TrainLogRow>& log, double min_drop);

// StudyReport carrying only the ablation curves.
StudyReport ablation_report(const std::vector<AblationResult>& results);

}  // namespace mindface::eval
