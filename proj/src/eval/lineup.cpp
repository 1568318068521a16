#include "mindface/eval/lineup.hpp"

#include "mindface/errors.hpp"

#include <algorithm>
#include <numeric>

namespace mindface::eval {
namespace {

enum Stream : std::uint64_t { kPool = 1, kSessions = 2 };

Lineup assemble(const face::FaceParams& target, std::span<const face::FaceParams> pool,
                std::span<const embedding::Embedding> pool_embeddings,
                const embedding::EmbeddingNet& embedder, Rng& rng, bool target_absent) {
  if (pool.size() != pool_embeddings.size()) throw InvalidArgument("pool and embeddings differ in size");
  const int need = target_absent ? kLineupSize : kLineupNeighbors;
  if (static_cast<int>(pool.size()) < need) throw InvalidArgument("lineup pool too small");

  const embedding::Embedding et = embedder.embed(target);
  const auto nn = nearest_neighbors(et, pool_embeddings, need);
  Lineup l;
  l.target = target;
  std::vector<face::FaceParams> members;
  if (!target_absent) members.push_back(target);
  for (int k = 0; k < need; ++k) {
    members.push_back(pool[nn[k]]);
    if (k < kLineupNeighbors) {
      l.neighbor_indices[k] = nn[k];
      l.neighbor_distances[k] = (pool_embeddings[nn[k]] - et).norm();
    }
  }
  std::array<int, kLineupSize> slots;
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  for (int k = 0; k < kLineupSize; ++k) l.candidates[slots[k]] = members[k];
  l.target_index = target_absent ? -1 : slots[0];
  return l;
}

std::vector<embedding::Embedding> embed_all(std::span<const face::FaceParams> pool,
                                            const embedding::EmbeddingNet& embedder) {
  std::vector<embedding::Embedding> out(pool.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pool.size()); ++i) out[i] = embedder.embed(pool[i]);
  return out;
}

}  // namespace

std::vector<int> nearest_neighbors(const embedding::Embedding& target,
                                   std::span<const embedding::Embedding> pool, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > pool.size()) throw InvalidArgument("k exceeds pool size");
  std::vector<std::pair<double, int>> d(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    d[i] = {(pool[i] - target).squaredNorm(), static_cast<int>(i)};
  }
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

Lineup build_lineup(const face::FaceParams& target, std::span<const face::FaceParams> pool,
                    std::span<const embedding::Embedding> pool_embeddings,
                    const embedding::EmbeddingNet& embedder, Rng& rng) {
  return assemble(target, pool, pool_embeddings, embedder, rng, false);
}

Lineup build_lineup(const face::FaceParams& target, std::span<const face::FaceParams> pool,
                    const embedding::EmbeddingNet& embedder, Rng& rng) {
  const auto emb = embed_all(pool, embedder);
  return assemble(target, pool, emb, embedder, rng, false);
}

Lineup build_target_absent_lineup(const face::FaceParams& target,
                                  std::span<const face::FaceParams> pool,
                                  std::span<const embedding::Embedding> pool_embeddings,
                                  const embedding::EmbeddingNet& embedder, Rng& rng) {
  return assemble(target, pool, pool_embeddings, embedder, rng, true);
}

double identification_rate(std::span<const LineupVote> votes) {
  if (votes.empty()) throw InvalidArgument("identification rate of an empty vote set");
  const auto hits = std::count_if(votes.begin(), votes.end(),
                                  [](const LineupVote& v) { return v.order[0] == v.target_index; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(votes.size());
}

double top3_rate(std::span<const LineupVote> votes) {
  if (votes.empty()) throw InvalidArgument("top-3 rate of an empty vote set");
  const auto hits = std::count_if(votes.begin(), votes.end(), [](const LineupVote& v) {
    return std::find(v.order.begin(), v.order.begin() + 3, v.target_index) != v.order.begin() + 3;
  });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(votes.size());
}

void LineupConfig::validate() const {
  if (n_sessions < 1) throw ConfigError("lineup.n_sessions must be positive");
  if (pool_size < kLineupSize) throw ConfigError("lineup.pool_size must be at least 4");
  if (raters_per_session < 1) throw ConfigError("lineup.raters_per_session must be positive");
}

LineupResult run_lineup_study(const session::Engine& engine, const embedding::EmbeddingNet& embedder,
                              const embedding::OracleConfig& raters, const LineupConfig& cfg) {
  cfg.validate();
  raters.validate();
  const face::Generator& gen = engine.generator();

  std::vector<face::FaceParams> pool(cfg.pool_size);
  {
    Rng rng = make_rng(derive_seed(cfg.seed, kPool));
    for (auto& p : pool) p = gen.decode_params(gen.sample_latent(rng));
  }
  const auto pool_emb = embed_all(pool, embedder);

  std::vector<std::vector<LineupVote>> votes(cfg.n_sessions);
  std::vector<int> stops(cfg.n_sessions);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < cfg.n_sessions; ++s) {
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, kSessions), static_cast<std::uint64_t>(s));
    Rng rng = make_rng(seed);
    const auto category = face::Category::from_index(std::uniform_int_distribution<int>(0, 3)(rng));
    session::Session sess = engine.create_session(category, session::Mode::Simulated, seed);
    engine.run_simulated(sess);
    stops[s] = sess.iteration();
    const face::FaceParams reconstruction = gen.decode_params(engine.current_latent(sess));
    const face::FaceParams target = gen.decode_params(*sess.simulated_target);
    const Lineup lineup = cfg.target_absent
                              ? build_target_absent_lineup(target, pool, pool_emb, embedder, rng)
                              : build_lineup(target, pool, pool_emb, embedder, rng);
    for (int r = 0; r < cfg.raters_per_session; ++r) {
      const auto order = embedding::rank_by_noisy_oracle(reconstruction, lineup.candidates, raters, rng);
      LineupVote v;
      std::copy(order.begin(), order.end(), v.order.begin());
      v.target_index = lineup.target_index;
      votes[s].push_back(v);
    }
  }

  LineupResult out;
  for (const auto& v : votes) out.all_votes.insert(out.all_votes.end(), v.begin(), v.end());
  out.votes = static_cast<int>(out.all_votes.size());
  out.identification_rate = identification_rate(out.all_votes);
  out.top3_rate = top3_rate(out.all_votes);
  double stop_sum = 0.0;
  for (int s : stops) stop_sum += s;
  out.mean_stop_iteration = stop_sum / cfg.n_sessions;
  return out;
}

}  // namespace mindface::eval
