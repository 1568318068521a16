#pragma once

// Ground-truth perceptual similarity used to synthesise human judgements.

#include "mindface/face/generator.hpp"
#include "mindface/ranking.hpp"

#include <span>

namespace mindface::embedding {

struct OracleConfig {
  // One weight per identity feature; nuisance features carry weight 0.
  Vector identity_weights = default_weights();
  Vector nuisance_weights = Vector::Zero(face::kNuisanceDim);
  double sigma_h = 0.22;

  static Vector default_weights();
  void validate() const;
};

// -sum_j w_j (a_j - b_j)^2 over identity features; 0 is the maximum.
double oracle_similarity(const face::FaceParams& a, const face::FaceParams& b,
                         const OracleConfig& cfg = {});

// Synthetic rater: oracle scores min-max normalised to [0,1] across the
// candidates, perturbed by U(-sigma_h, sigma_h), sorted best first (stable).
std::vector<int> rank_by_noisy_oracle(const face::FaceParams& reference,
                                      std::span<const face::FaceParams> candidates,
                                      const OracleConfig& cfg, Rng& rng);

Ranking oracle_ranking(const face::FaceParams& target,
                       std::span<const face::FaceParams> six_faces, const OracleConfig& cfg,
                       Rng& rng);

}  // namespace mindface::embedding
