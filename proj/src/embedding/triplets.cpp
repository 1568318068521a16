#include "mindface/embedding/triplets.hpp"

#include "mindface/errors.hpp"

#include <algorithm>

namespace mindface::embedding {

std::vector<Triplet> generate_triplets(const face::FaceParams& target,
                                       const std::vector<RankedSet>& rankings) {
  std::vector<Triplet> out;
  out.reserve(rankings.size() * 15);
  const Vector anchor = target.observable();
  for (const auto& [set, ranking] : rankings) {
    if (set == nullptr) throw InvalidArgument("null auxiliary set");
    for (int hi = 0; hi < kRankedFaces; ++hi) {
      for (int lo = hi + 1; lo < kRankedFaces; ++lo) {
        out.push_back(Triplet{anchor, set->faces[ranking[hi]].params.observable(),
                              set->faces[ranking[lo]].params.observable()});
      }
    }
  }
  return out;
}

double triplet_loss(const Embedding& a, const Embedding& p, const Embedding& n, double margin) {
  return std::max((a - p).squaredNorm() - (a - n).squaredNorm() + margin, 0.0);
}

std::vector<Triplet> collect_oracle_triplets(const face::Generator& generator,
                                             const face::AuxiliaryPools& pools,
                                             const OracleConfig& oracle, int participants,
                                             Rng& rng) {
  std::vector<Triplet> all;
  for (int u = 0; u < participants; ++u) {
    const face::Latent target = generator.sample_latent(rng);
    const face::FaceParams target_params = generator.decode_params(target);
    const face::Category cat = face::category_of_params(target_params);
    std::vector<RankedSet> ranked;
    for (const face::AuxiliarySet& s : pools.pool(cat)) {
      std::array<face::FaceParams, kRankedFaces> faces;
      for (int k = 0; k < kRankedFaces; ++k) faces[k] = s.faces[k].params;
      ranked.emplace_back(&s, oracle_ranking(target_params, faces, oracle, rng));
    }
    auto triplets = generate_triplets(target_params, ranked);
    std::move(triplets.begin(), triplets.end(), std::back_inserter(all));
  }
  return all;
}

namespace {

template <typename Fn>
void for_each_triplet_loss(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                           double margin, Fn&& fn) {
  for (const Triplet& t : triplets) {
    fn(triplet_loss(net.embed_observable(t.anchor), net.embed_observable(t.positive),
                    net.embed_observable(t.negative), margin));
  }
}

}  // namespace

double triplet_satisfaction(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                            double margin) {
  if (triplets.empty()) throw InvalidArgument("empty triplet set");
  std::size_t ok = 0;
  for_each_triplet_loss(net, triplets, margin, [&](double l) { ok += (l == 0.0); });
  return static_cast<double>(ok) / static_cast<double>(triplets.size());
}

double mean_triplet_loss(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                         double margin) {
  if (triplets.empty()) throw InvalidArgument("empty triplet set");
  double total = 0.0;
  for_each_triplet_loss(net, triplets, margin, [&](double l) { total += l; });
  return total / static_cast<double>(triplets.size());
}

}  // namespace mindface::embedding
