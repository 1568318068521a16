#pragma once

// Lineup identification: the target among its three nearest embedding-space
// neighbours, ranked by synthetic raters against a reconstruction.

#include "mindface/recon/trainer.hpp"
#include "mindface/session/session.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mindface::eval {

inline constexpr int kLineupSize = 4;
inline constexpr int kLineupNeighbors = kLineupSize - 1;

struct Lineup {
  face::FaceParams target;
  std::array<face::FaceParams, kLineupSize> candidates;
  int target_index = -1;  // slot of the target in candidates; -1 if absent
  // Pool indices and embedding L2 distances of the chosen neighbours,
  // nearest first.
  std::array<int, kLineupNeighbors> neighbor_indices{};
  std::array<double, kLineupNeighbors> neighbor_distances{};
};

// Pool indices of the k faces nearest to `target` by embedding L2 distance
// (ties to the lower index), nearest first.
std::vector<int> nearest_neighbors(const embedding::Embedding& target,
                                   std::span<const embedding::Embedding> pool, int k);

// The pool must not contain the target itself and must hold at least three
// faces. Candidate order is shuffled with `rng`.
Lineup build_lineup(const face::FaceParams& target, std::span<const face::FaceParams> pool,
                    const embedding::EmbeddingNet& embedder, Rng& rng);
// Same, with precomputed pool embeddings.
Lineup build_lineup(const face::FaceParams& target, std::span<const face::FaceParams> pool,
                    std::span<const embedding::Embedding> pool_embeddings,
                    const embedding::EmbeddingNet& embedder, Rng& rng);

// Target-absent variant: the four nearest neighbours, no target.
Lineup build_target_absent_lineup(const face::FaceParams& target,
                                  std::span<const face::FaceParams> pool,
                                  std::span<const embedding::Embedding> pool_embeddings,
                                  const embedding::EmbeddingNet& embedder, Rng& rng);

// One rater's ranking of the four candidates, best match first.
struct LineupVote {
  std::array<int, kLineupSize> order{};
  int target_index = -1;
};

// Percentage of votes placing the target first.
double identification_rate(std::span<const LineupVote> votes);
// Percentage of votes placing the target within the first three.
double top3_rate(std::span<const LineupVote> votes);

struct LineupConfig {
  int n_sessions = 100;
  int pool_size = 5000;
  int raters_per_session = 5;
  std::uint64_t seed = 29;
  bool target_absent = false;

  void validate() const;
};

struct LineupResult {
  double identification_rate = 0.0;
  double top3_rate = 0.0;
  int votes = 0;
  double mean_stop_iteration = 0.0;
  std::vector<LineupVote> all_votes;
};

// Each session simulates a rater-driven reconstruction with the engine, then
// `raters_per_session` synthetic raters rank the lineup against the final
// reconstruction. Neighbours come from one shared pool of random faces.
LineupResult run_lineup_study(const session::Engine& engine, const embedding::EmbeddingNet& embedder,
                              const embedding::OracleConfig& raters, const LineupConfig& cfg);

}  // namespace mindface::eval
