#include "mindface/user/user_model.hpp"

#include "mindface/common/csv.hpp"
#include "mindface/errors.hpp"

#include <algorithm>

namespace mindface::user {

Ranking rank_by_similarity(std::span<const double> similarities, double sigma, Rng& rng) {
  if (similarities.size() != kRankedFaces) throw InvalidArgument("expected six similarities");
  if (sigma < 0.0) throw InvalidArgument("sigma must be >= 0");
  std::array<double, kRankedFaces> noisy;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < kRankedFaces; ++k) {
    const double u = unit(rng);
    noisy[k] = similarities[k] + sigma * (2.0 * u - 1.0);
  }
  return rank_by_scores(noisy);
}

Ranking rank_faces(const face::AuxiliarySet& aux, const face::FaceParams& target,
                   const embedding::EmbeddingNet& net, double sigma, Rng& rng) {
  const embedding::Embedding et = net.embed(target);
  std::array<double, kRankedFaces> sims;
  for (int k = 0; k < kRankedFaces; ++k) sims[k] = embedding::cosine(et, net.embed(aux.faces[k].params));
  return rank_by_similarity(sims, sigma, rng);
}

double kendall_tau(const Ranking& a, const Ranking& b) {
  int concordant = 0;
  int discordant = 0;
  for (int x = 0; x < kRankedFaces; ++x) {
    for (int y = x + 1; y < kRankedFaces; ++y) {
      const int da = a.position_of(x) - a.position_of(y);
      const int db = b.position_of(x) - b.position_of(y);
      if ((da < 0) == (db < 0)) ++concordant; else ++discordant;
    }
  }
  return static_cast<double>(concordant - discordant) / 15.0;
}

AgreementMatrix agreement_matrix(std::span<const std::pair<Ranking, Ranking>> pairs) {
  if (pairs.empty()) throw InvalidArgument("agreement matrix needs at least one pair");
  AgreementMatrix m = AgreementMatrix::Zero();
  for (const auto& [first, second] : pairs) {
    for (int i = 0; i < kRankedFaces; ++i) m(i, second.position_of(first[i])) += 1.0;
  }
  return m / static_cast<double>(pairs.size());
}

PoolEmbeddings::PoolEmbeddings(const face::AuxiliaryPools& pools, const embedding::EmbeddingNet& net) {
  for (int c = 0; c < face::kCategoryCount; ++c) {
    for (const face::AuxiliarySet& s : pools.pool(face::Category::from_index(c))) {
      std::array<embedding::Embedding, kRankedFaces> e;
      for (int k = 0; k < kRankedFaces; ++k) e[k] = net.embed(s.faces[k].params);
      emb_[c].push_back(std::move(e));
    }
  }
}

const std::array<embedding::Embedding, kRankedFaces>& PoolEmbeddings::set(face::Category c,
                                                                          int iteration) const {
  return emb_.at(c.index()).at(iteration - 1);
}

std::array<double, kRankedFaces> set_similarities(
    const embedding::Embedding& target, const std::array<embedding::Embedding, kRankedFaces>& set) {
  std::array<double, kRankedFaces> sims;
  for (int k = 0; k < kRankedFaces; ++k) sims[k] = embedding::cosine(target, set[k]);
  return sims;
}

TauStudy mean_pairwise_tau(const RankingWorld& world, double sigma, int n_targets, int repeats,
                           std::uint64_t seed) {
  if (n_targets < 1 || repeats < 1) throw InvalidArgument("mean_pairwise_tau: n_targets, repeats >= 1");
  const PoolEmbeddings cache(*world.pools, *world.net);
  TauStudy out;
  out.samples.assign(static_cast<std::size_t>(n_targets) * repeats, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n_targets; ++t) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const face::Latent target = world.generator->sample_latent(rng);
    const face::FaceParams params = world.generator->decode_params(target);
    const face::Category cat = face::category_of_params(params);
    const int n_sets = static_cast<int>(world.pools->pool(cat).size());
    const int iteration = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n_sets));
    const auto sims = set_similarities(world.net->embed(params), cache.set(cat, iteration));
    for (int r = 0; r < repeats; ++r) {
      const Ranking a = rank_by_similarity(sims, sigma, rng);
      const Ranking b = rank_by_similarity(sims, sigma, rng);
      out.samples[static_cast<std::size_t>(t) * repeats + r] = kendall_tau(a, b);
    }
  }
  double total = 0.0;
  for (double v : out.samples) total += v;
  out.mean = total / static_cast<double>(out.samples.size());
  return out;
}

TauStudy mean_pairwise_tau(std::span<const std::pair<Ranking, Ranking>> pairs) {
  if (pairs.empty()) throw InvalidArgument("mean_pairwise_tau: empty dataset");
  TauStudy out;
  for (const auto& [a, b] : pairs) out.samples.push_back(kendall_tau(a, b));
  double total = 0.0;
  for (double v : out.samples) total += v;
  out.mean = total / static_cast<double>(out.samples.size());
  return out;
}

std::vector<std::pair<Ranking, Ranking>> rater_ranking_pairs(const face::Generator& generator,
                                                             const face::AuxiliaryPools& pools,
                                                             const embedding::OracleConfig& raters,
                                                             int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw InvalidArgument("rater_ranking_pairs: n_pairs >= 1");
  std::vector<std::pair<Ranking, Ranking>> out(n_pairs);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n_pairs; ++t) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const face::FaceParams params = generator.decode_params(generator.sample_latent(rng));
    const face::Category cat = face::category_of_params(params);
    const int n_sets = static_cast<int>(pools.pool(cat).size());
    const int iteration = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n_sets));
    const face::AuxiliarySet& set = pools.set(cat, iteration);
    std::array<face::FaceParams, kRankedFaces> faces;
    for (int k = 0; k < kRankedFaces; ++k) faces[k] = set.faces[k].params;
    out[t].first = embedding::oracle_ranking(params, faces, raters, rng);
    out[t].second = embedding::oracle_ranking(params, faces, raters, rng);
  }
  return out;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("wasserstein1: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
    return total / static_cast<double>(sa.size());
  }
  // Integrate |Qa(u) - Qb(u)| over the merged quantile breakpoints.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double total = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - u) * std::abs(sa[i] - sb[j]);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

CalibrationResult calibrate_sigma(const RankingWorld& world, std::span<const double> reference,
                                  std::span<const double> grid, int n_samples, std::uint64_t seed) {
  if (reference.empty()) throw InvalidArgument("calibrate_sigma: empty reference");
  if (grid.empty()) throw InvalidArgument("calibrate_sigma: empty grid");
  CalibrationResult out;
  out.grid.assign(grid.begin(), grid.end());
  double best = std::numeric_limits<double>::infinity();
  // scan in ascending sigma so strict '<' keeps the smaller sigma on ties
  std::vector<std::size_t> idx(grid.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  out.distances.assign(grid.size(), 0.0);
  out.mean_tau.assign(grid.size(), 0.0);
  for (std::size_t k : idx) {
    const TauStudy model = mean_pairwise_tau(world, grid[k], n_samples, 1, seed);
    const double d = wasserstein1(model.samples, reference);
    out.distances[k] = d;
    out.mean_tau[k] = model.mean;
    if (d < best) {
      best = d;
      out.sigma = grid[k];
    }
  }
  return out;
}

void export_tau_samples(std::span<const double> samples, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (double v : samples) rows.push_back({format_number(v)});
  write_csv(path, {"tau"}, rows);
}

void export_agreement_matrix(const AgreementMatrix& m, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < kRankedFaces; ++i) {
    std::vector<std::string> r;
    for (int j = 0; j < kRankedFaces; ++j) r.push_back(format_number(m(i, j)));
    rows.push_back(std::move(r));
  }
  write_csv(path, {"rank0", "rank1", "rank2", "rank3", "rank4", "rank5"}, rows);
}

}  // namespace mindface::user
