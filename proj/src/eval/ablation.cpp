#include "mindface/eval/ablation.hpp"

#include "mindface/errors.hpp"

namespace mindface::eval {

void AblationConfig::validate() const {
  train.validate();
  if (num_sigma < 0.0) throw ConfigError("ablation.num_sigma must be >= 0");
}

std::vector<AblationVariant> ablation_variants(const AblationConfig& cfg) {
  cfg.validate();
  recon::TrainConfig t = cfg.train;
  t.sigma = 0.0;
  t.variable_iterations = false;
  std::vector<AblationVariant> v;
  v.push_back({"baseline", t, false});
  v.push_back({"+TE", t, true});
  t.variable_iterations = true;
  v.push_back({"+VI", t, true});
  t.sigma = cfg.num_sigma;
  v.push_back({"+NUM", t, true});
  return v;
}

AblationResult summarise_log(const std::string& label, const std::vector<recon::TrainLogRow>& log) {
  if (log.empty()) throw InvalidArgument("empty training log");
  AblationResult r;
  r.label = label;
  r.log = log;
  r.peak_val_similarity = log.front().val_similarity;
  r.peak_step = log.front().step;
  for (const auto& row : log) {
    if (row.val_similarity > r.peak_val_similarity) {
      r.peak_val_similarity = row.val_similarity;
      r.peak_step = row.step;
    }
  }
  r.final_val_similarity = log.back().val_similarity;
  return r;
}

std::vector<AblationResult> ablation_suite(const recon::ReconConfig& net_cfg, const AblationConfig& cfg,
                                           const AblationWorld& world) {
  if (!world.generator || !world.pools || !world.base_embedder || !world.tuned_embedder) {
    throw InvalidArgument("ablation world incomplete");
  }
  std::vector<AblationResult> out;
  for (const auto& variant : ablation_variants(cfg)) {
    const embedding::EmbeddingNet* e = variant.tuned_embedding ? world.tuned_embedder : world.base_embedder;
    const recon::SimulationWorld sim{world.generator, world.pools, e, e, world.tuned_embedder, world.rater};
    const auto trained = recon::train(net_cfg, variant.train, sim);
    out.push_back(summarise_log(variant.label, trained.log));
  }
  return out;
}

bool shows_overfitting(const std::vector<recon::TrainLogRow>& log, double min_drop) {
  if (log.size() < 3) return false;
  const AblationResult s = summarise_log("", log);
  std::size_t peak = 0;
  while (log[peak].step != s.peak_step) ++peak;
  if (peak + 1 >= log.size()) return false;
  const bool declined = s.peak_val_similarity - log.back().val_similarity >= min_drop;
  const bool train_improved = log.back().train_similarity > log[peak].train_similarity;
  return declined && train_improved;
}

StudyReport ablation_report(const std::vector<AblationResult>& results) {
  StudyReport r;
  for (const auto& res : results) r.ablation_curves[res.label] = res.log;
  return r;
}

}  // namespace mindface::eval
