#include "mindface/embedding/oracle.hpp"

#include "mindface/errors.hpp"

#include <algorithm>
#include <numeric>

namespace mindface::embedding {

Vector OracleConfig::default_weights() {
  using F = face::Feature;
  Vector w = Vector::Ones(face::kIdentityDim);
  for (F f : {F::EyeSize, F::EyeSpacing, F::EyeHeight, F::NoseWidth, F::NoseLength, F::MouthWidth,
              F::LipThickness}) {
    w(static_cast<int>(f)) = 2.0;
  }
  return w;
}

void OracleConfig::validate() const {
  if (identity_weights.size() != face::kIdentityDim) throw ConfigError("oracle weight count");
  if ((identity_weights.array() < 0.0).any()) throw ConfigError("oracle weights must be >= 0");
  if (nuisance_weights.size() != face::kNuisanceDim || !nuisance_weights.isZero(0.0)) {
    throw ConfigError("oracle nuisance weights must be exactly 0");
  }
  if (sigma_h < 0.0) throw ConfigError("sigma_h must be >= 0");
}

double oracle_similarity(const face::FaceParams& a, const face::FaceParams& b,
                         const OracleConfig& cfg) {
  return -(cfg.identity_weights.array() * (a.identity - b.identity).array().square()).sum();
}

std::vector<int> rank_by_noisy_oracle(const face::FaceParams& reference,
                                      std::span<const face::FaceParams> candidates,
                                      const OracleConfig& cfg, Rng& rng) {
  const std::size_t n = candidates.size();
  std::vector<double> scores(n);
  for (std::size_t k = 0; k < n; ++k) scores[k] = oracle_similarity(reference, candidates[k], cfg);
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double low = *lo;
  const double range = *hi - low;
  for (double& s : scores) {
    s = range > 0.0 ? (s - low) / range : 0.0;
    if (cfg.sigma_h > 0.0) s += uniform(rng, -cfg.sigma_h, cfg.sigma_h);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

Ranking oracle_ranking(const face::FaceParams& target,
                       std::span<const face::FaceParams> six_faces, const OracleConfig& cfg,
                       Rng& rng) {
  if (six_faces.size() != kRankedFaces) throw InvalidArgument("oracle ranking needs six faces");
  return Ranking(rank_by_noisy_oracle(target, six_faces, cfg, rng));
}

}  // namespace mindface::embedding
