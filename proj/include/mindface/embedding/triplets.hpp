#pragma once

#include "mindface/embedding/embedding_net.hpp"
#include "mindface/embedding/oracle.hpp"
#include "mindface/face/pools.hpp"
#include "mindface/ranking.hpp"

#include <utility>
#include <vector>

namespace mindface::embedding {

// Observable face vectors; positive was ranked above negative.
struct Triplet {
  Vector anchor;
  Vector positive;
  Vector negative;
};

using RankedSet = std::pair<const face::AuxiliarySet*, Ranking>;

// All C(6,2) = 15 (higher-ranked, lower-ranked) pairs per ranked set, with the
// target as anchor.
std::vector<Triplet> generate_triplets(const face::FaceParams& target,
                                       const std::vector<RankedSet>& rankings);

// max(|a-p|^2 - |a-n|^2 + m, 0)
double triplet_loss(const Embedding& a, const Embedding& p, const Embedding& n, double margin);

// Simulated data collection: each participant memorises a random target and
// ranks every auxiliary set of the target's category with the noisy oracle.
std::vector<Triplet> collect_oracle_triplets(const face::Generator& generator,
                                             const face::AuxiliaryPools& pools,
                                             const OracleConfig& oracle, int participants,
                                             Rng& rng);

// Fraction of triplets whose loss is exactly zero at the given margin.
double triplet_satisfaction(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                            double margin);
double mean_triplet_loss(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                         double margin);

}  // namespace mindface::embedding
