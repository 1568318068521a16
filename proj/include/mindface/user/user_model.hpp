#pragma once

// Noisy ranking user model and rank-agreement statistics.

#include "mindface/embedding/embedding_net.hpp"
#include "mindface/embedding/oracle.hpp"
#include "mindface/face/pools.hpp"
#include "mindface/ranking.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace mindface::user {

struct UserModelConfig {
  double sigma = 0.22;
  std::uint64_t seed = 5;
};

// Adds U(-sigma, sigma) to each similarity and ranks descending (stable).
// Always consumes exactly six uniform draws, independent of sigma, so runs
// with different sigma but the same seed see coupled noise.
Ranking rank_by_similarity(std::span<const double> similarities, double sigma, Rng& rng);

Ranking rank_faces(const face::AuxiliarySet& aux, const face::FaceParams& target,
                   const embedding::EmbeddingNet& net, double sigma, Rng& rng);

double kendall_tau(const Ranking& a, const Ranking& b);

using AgreementMatrix = Eigen::Matrix<double, kRankedFaces, kRankedFaces, Eigen::RowMajor>;

// M(i,j): fraction of pairs where the face placed at rank i by the first
// ranking is placed at rank j by the second.
AgreementMatrix agreement_matrix(std::span<const std::pair<Ranking, Ranking>> pairs);

// Embeddings of every pool face under one net, cached for fast ranking.
class PoolEmbeddings {
 public:
  PoolEmbeddings(const face::AuxiliaryPools& pools, const embedding::EmbeddingNet& net);
  const std::array<embedding::Embedding, kRankedFaces>& set(face::Category c, int iteration) const;

 private:
  std::array<std::vector<std::array<embedding::Embedding, kRankedFaces>>, face::kCategoryCount> emb_;
};

// Cosine similarities of a target embedding against one cached set.
std::array<double, kRankedFaces> set_similarities(
    const embedding::Embedding& target, const std::array<embedding::Embedding, kRankedFaces>& set);

struct TauStudy {
  double mean = 0.0;
  std::vector<double> samples;
};

struct RankingWorld {
  const face::Generator* generator = nullptr;
  const face::AuxiliaryPools* pools = nullptr;
  const embedding::EmbeddingNet* net = nullptr;
};

// Model-model agreement: for each of n_targets random targets and a random
// auxiliary set of its category, `repeats` pairs of independent noisy
// rankings; one tau sample per pair.
TauStudy mean_pairwise_tau(const RankingWorld& world, double sigma, int n_targets, int repeats,
                           std::uint64_t seed);

// Dataset variant: tau of each recorded pair.
TauStudy mean_pairwise_tau(std::span<const std::pair<Ranking, Ranking>> pairs);

// Synthetic human-human pairs: two independent noisy-oracle raters rank the
// same random (target, auxiliary set) instance.
std::vector<std::pair<Ranking, Ranking>> rater_ranking_pairs(const face::Generator& generator,
                                                             const face::AuxiliaryPools& pools,
                                                             const embedding::OracleConfig& raters,
                                                             int n_pairs, std::uint64_t seed);

// 1-D Wasserstein-1 distance between two empirical distributions.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct CalibrationResult {
  double sigma = 0.0;
  std::vector<double> grid;
  std::vector<double> distances;
  std::vector<double> mean_tau;
};

// Grid search for the sigma whose model-model tau distribution is closest in
// W1 to the reference samples; ties resolve to the smaller sigma. Every grid
// point reuses the same seed (common random numbers).
CalibrationResult calibrate_sigma(const RankingWorld& world, std::span<const double> reference,
                                  std::span<const double> grid, int n_samples, std::uint64_t seed);

void export_tau_samples(std::span<const double> samples, const std::filesystem::path& path);
void export_agreement_matrix(const AgreementMatrix& m, const std::filesystem::path& path);

}  // namespace mindface::user
