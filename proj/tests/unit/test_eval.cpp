#include <doctest.h>

#include "checks.hpp"
#include "mindface/common/csv.hpp"
#include "mindface/errors.hpp"
#include "mindface/eval/ablation.hpp"
#include "mindface/eval/lineup.hpp"
#include "mindface/eval/report.hpp"
#include "mindface/eval/study.hpp"
#include "mindface/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace mindface;
using namespace mindface::eval;

namespace {

const testing::MiniWorld& mini() {
  static const testing::MiniWorld w(3);
  return w;
}

recon::SimulationWorld sim_world() {
  const auto& w = mini();
  return {&w.generator, &w.pools, &w.embedder, &w.embedder, &w.embedder, embedding::OracleConfig{}};
}

std::vector<face::FaceParams> random_faces(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<face::FaceParams> out(n);
  for (auto& p : out) p = mini().generator.decode_params(mini().generator.sample_latent(rng));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

// Independent stop rule: first i >= 2 closing `patience` consecutive changes
// below alpha, else the last iteration.
int oracle_stop(const std::vector<face::Latent>& recs, double alpha, int patience) {
  int streak = 0;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    double change = 0.0;
    for (int k = 0; k < recs[i].size(); ++k) change += std::abs(recs[i](k) - recs[i - 1](k));
    change /= static_cast<double>(recs[i].size());
    streak = change < alpha ? streak + 1 : 0;
    if (streak == patience) return static_cast<int>(i + 1);
  }
  return static_cast<int>(recs.size());
}

// Latent trajectory whose per-iteration mean absolute change is 1 / i.
PrefixTrace synthetic_trace(double quality_scale) {
  PrefixTrace t;
  face::Latent w = face::Latent::Zero(32);
  for (int i = 1; i <= 20; ++i) {
    if (i > 1) w.array() += 1.0 / i;
    t.reconstructions.push_back(w);
    t.similarities.push_back(quality_scale * (1.0 - 1.0 / i));
    t.baseline_similarities.push_back(0.0);
  }
  return t;
}

std::vector<recon::TrainLogRow> log_of(std::initializer_list<std::pair<double, double>> val_train) {
  std::vector<recon::TrainLogRow> log;
  int step = 0;
  for (auto [v, t] : val_train) {
    recon::TrainLogRow r;
    r.step = step;
    r.val_similarity = v;
    r.train_similarity = t;
    log.push_back(r);
    step += 500;
  }
  return log;
}

}  // namespace

TEST_CASE("nearest neighbours agree with a brute-force sort") {
  Rng rng = make_rng(5);
  std::vector<embedding::Embedding> pool(5000);
  for (auto& e : pool) {
    e = embedding::Embedding(16);
    for (int k = 0; k < 16; ++k) e(k) = uniform(rng, -1.0, 1.0);
  }
  pool[77] = pool[12];  // exact tie resolves to the lower index
  for (int trial = 0; trial < 5; ++trial) {
    embedding::Embedding q = trial == 0 ? pool[12] : pool[trial * 100];
    if (trial > 0) q(0) += 0.01;
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return (pool[a] - q).norm() < (pool[b] - q).norm(); });
    const auto got = nearest_neighbors(q, pool, 3);
    CHECK(got == std::vector<int>(order.begin(), order.begin() + 3));
  }
  CHECK(nearest_neighbors(pool[0], pool, 0).empty());
  CHECK_THROWS_AS(nearest_neighbors(pool[0], std::span(pool).first(2), 3), InvalidArgument);
}

TEST_CASE("lineup construction") {
  const auto pool = random_faces(400, 8);
  const face::FaceParams target = random_faces(1, 9)[0];
  Rng rng = make_rng(10);
  const Lineup l = build_lineup(target, pool, mini().embedder, rng);
  REQUIRE(l.target_index >= 0);
  CHECK(l.candidates[l.target_index] == target);
  int neighbours_found = 0;
  for (int k = 0; k < kLineupNeighbors; ++k) {
    CHECK(std::count(l.candidates.begin(), l.candidates.end(), pool[l.neighbor_indices[k]]) == 1);
    if (k > 0) CHECK(l.neighbor_distances[k] >= l.neighbor_distances[k - 1]);
    ++neighbours_found;
  }
  CHECK(neighbours_found == 3);

  std::vector<double> d;
  const auto et = mini().embedder.embed(target);
  for (const auto& p : pool) d.push_back((mini().embedder.embed(p) - et).norm());
  std::sort(d.begin(), d.end());
  for (int k = 0; k < kLineupNeighbors; ++k) CHECK(l.neighbor_distances[k] == doctest::Approx(d[k]).epsilon(1e-12));

  // A pool of exactly three faces yields those three as neighbours.
  const std::vector<face::FaceParams> three(pool.begin(), pool.begin() + 3);
  const Lineup small = build_lineup(target, three, mini().embedder, rng);
  for (int k = 0; k < 3; ++k) CHECK(std::count(small.candidates.begin(), small.candidates.end(), three[k]) == 1);
  CHECK_THROWS_AS(build_lineup(target, std::span(three).first(2), mini().embedder, rng), InvalidArgument);

  // An exact duplicate of the target is always the nearest neighbour.
  std::vector<face::FaceParams> with_dup = pool;
  with_dup[250] = target;
  const Lineup dup = build_lineup(target, with_dup, mini().embedder, rng);
  CHECK(dup.neighbor_indices[0] == 250);
  CHECK(dup.neighbor_distances[0] == 0.0);

  std::vector<embedding::Embedding> emb;
  for (const auto& p : pool) emb.push_back(mini().embedder.embed(p));
  const Lineup absent = build_target_absent_lineup(target, pool, emb, mini().embedder, rng);
  CHECK(absent.target_index == -1);
  CHECK(std::count(absent.candidates.begin(), absent.candidates.end(), target) == 0);
}

TEST_CASE("lineup slots are shuffled uniformly") {
  const auto pool = random_faces(50, 11);
  const face::FaceParams target = random_faces(1, 12)[0];
  std::vector<embedding::Embedding> emb;
  for (const auto& p : pool) emb.push_back(mini().embedder.embed(p));
  Rng rng = make_rng(13);
  std::array<int, kLineupSize> slot_counts{};
  const int n = 4000;
  for (int i = 0; i < n; ++i) ++slot_counts[build_lineup(target, pool, emb, mini().embedder, rng).target_index];
  for (int c : slot_counts) CHECK(std::abs(c - n / 4) < 5 * std::sqrt(n * 0.25 * 0.75));
}

TEST_CASE("identification and top-3 rates") {
  std::vector<LineupVote> all_hit(10), all_miss(10), mixed;
  for (auto& v : all_hit) {
    v.order = {2, 0, 1, 3};
    v.target_index = 2;
  }
  for (auto& v : all_miss) {
    v.order = {0, 1, 3, 2};
    v.target_index = 2;
  }
  CHECK(identification_rate(all_hit) == 100.0);
  CHECK(identification_rate(all_miss) == 0.0);
  CHECK(top3_rate(all_miss) == 0.0);
  mixed = {{{1, 0, 2, 3}, 1}, {{0, 1, 2, 3}, 1}, {{0, 2, 1, 3}, 1}, {{0, 2, 3, 1}, 1}};
  CHECK(identification_rate(mixed) == 25.0);
  CHECK(top3_rate(mixed) == 75.0);
  LineupVote absent{{0, 1, 2, 3}, -1};
  CHECK(identification_rate(std::span(&absent, 1)) == 0.0);
  CHECK_THROWS_AS(identification_rate({}), InvalidArgument);

  Rng rng = make_rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LineupVote> votes(7);
    for (auto& v : votes) {
      v.order = {0, 1, 2, 3};
      std::shuffle(v.order.begin(), v.order.end(), rng);
      v.target_index = std::uniform_int_distribution<int>(0, 3)(rng);
    }
    CHECK(top3_rate(votes) >= identification_rate(votes));
  }
}

TEST_CASE("an exact reconstruction is identified by noiseless raters") {
  const auto pool = random_faces(500, 15);
  std::vector<embedding::Embedding> emb;
  for (const auto& p : pool) emb.push_back(mini().embedder.embed(p));
  embedding::OracleConfig noiseless;
  noiseless.sigma_h = 0.0;
  Rng rng = make_rng(16);
  std::vector<LineupVote> votes;
  for (const auto& target : random_faces(50, 17)) {
    const Lineup l = build_lineup(target, pool, emb, mini().embedder, rng);
    for (int r = 0; r < 5; ++r) {
      const auto order = embedding::rank_by_noisy_oracle(target, l.candidates, noiseless, rng);
      LineupVote v;
      std::copy(order.begin(), order.end(), v.order.begin());
      v.target_index = l.target_index;
      votes.push_back(v);
    }
  }
  CHECK(identification_rate(votes) == 100.0);
}

TEST_CASE("lineup study runs and is deterministic") {
  const session::Engine engine(mini().generator, mini().pools, mini().net, embedding::OracleConfig{});
  LineupConfig cfg;
  cfg.n_sessions = 6;
  cfg.pool_size = 200;
  cfg.raters_per_session = 3;
  const LineupResult a = run_lineup_study(engine, mini().embedder, embedding::OracleConfig{}, cfg);
  const LineupResult b = run_lineup_study(engine, mini().embedder, embedding::OracleConfig{}, cfg);
  CHECK(a.votes == 18);
  CHECK(a.identification_rate == b.identification_rate);
  CHECK(a.top3_rate >= a.identification_rate);
  CHECK(a.mean_stop_iteration >= 2.0);
  CHECK(a.mean_stop_iteration <= 20.0);
  for (std::size_t i = 0; i < a.all_votes.size(); ++i) CHECK(a.all_votes[i].order == b.all_votes[i].order);

  cfg.target_absent = true;
  const LineupResult absent = run_lineup_study(engine, mini().embedder, embedding::OracleConfig{}, cfg);
  CHECK(absent.identification_rate == 0.0);
  cfg.n_sessions = 0;
  CHECK_THROWS_AS(run_lineup_study(engine, mini().embedder, embedding::OracleConfig{}, cfg), ConfigError);
}

TEST_CASE("stop iteration rule") {
  const PrefixTrace t = synthetic_trace(1.0);
  // Changes are 1/i at iteration i, so alpha 0.105 first passes at i = 10.
  CHECK(stop_iteration(t.reconstructions, 0.105, 1) == 10);
  CHECK(stop_iteration(t.reconstructions, 0.105, 3) == 12);
  CHECK(stop_iteration(t.reconstructions, 1e-6, 1) == 20);
  CHECK(stop_iteration(t.reconstructions, 10.0, 1) == 2);
  Rng rng = make_rng(18);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<face::Latent> recs;
    face::Latent w = face::Latent::Zero(8);
    const int len = 1 + trial % 20;
    for (int i = 0; i < len; ++i) {
      for (int k = 0; k < 8; ++k) w(k) += uniform(rng, -0.3, 0.3);
      recs.push_back(w);
    }
    const double alpha = uniform(rng, 0.05, 0.2);
    const int patience = 1 + trial % 3;
    CHECK(stop_iteration(recs, alpha, patience) == oracle_stop(recs, alpha, patience));
  }
  CHECK_THROWS_AS(stop_iteration({}, 0.1, 1), InvalidArgument);
}

TEST_CASE("alpha calibration picks the largest alpha within tolerance") {
  const std::vector<PrefixTrace> traces = {synthetic_trace(1.0), synthetic_trace(0.5)};
  const std::vector<double> grid = {0.31, 0.045, 0.095, 0.18};
  const double tol = 0.05;
  const AlphaCalibration c = calibrate_alpha(traces, grid, tol);
  CHECK(c.grid == std::vector<double>{0.045, 0.095, 0.18, 0.31});
  double expected = 0.045;
  for (std::size_t g = 0; g < c.grid.size(); ++g) {
    double gap = 0.0, stop = 0.0;
    for (const auto& tr : traces) {
      const int s = oracle_stop(tr.reconstructions, c.grid[g], 1);
      gap += tr.similarities.back() - tr.similarities[s - 1];
      stop += s;
    }
    CHECK(c.quality_gap[g] == doctest::Approx(gap / 2));
    CHECK(c.mean_stop_iteration[g] == doctest::Approx(stop / 2));
    if (gap / 2 <= tol) expected = c.grid[g];
  }
  CHECK(c.alpha == expected);
  CHECK(calibrate_alpha(traces, std::vector<double>{0.9}, 0.0).alpha == 0.9);
  CHECK_THROWS_AS(calibrate_alpha(traces, std::vector<double>{}, tol), InvalidArgument);
  CHECK_THROWS_AS(calibrate_alpha(traces, std::vector<double>{-0.1}, tol), InvalidArgument);
}

TEST_CASE("simulated study") {
  StudyConfig cfg;
  cfg.n_targets = 6;
  const StudyReport a = run_simulated_study(mini().net, sim_world(), cfg);
  const StudyReport b = run_simulated_study(mini().net, sim_world(), cfg);
  CHECK(a == b);
  CHECK(a.targets.size() == 6);
  CHECK(a.curve.size() == 20);
  CHECK(a.stop_histogram.size() == 20);
  CHECK(std::accumulate(a.stop_histogram.begin(), a.stop_histogram.end(), 0) == 6);
  CHECK(a.curve[0].mean_change == 0.0);
  double mean = 0.0, stop = 0.0;
  for (const auto& t : a.targets) {
    mean += t.similarity;
    stop += t.stop_iteration;
    CHECK(t.stop_iteration >= 2);
    CHECK(t.similarity >= -1.0);
    CHECK(t.similarity <= 1.0);
  }
  CHECK(a.mean_similarity == doctest::Approx(mean / 6));
  CHECK(a.mean_stop_iteration == doctest::Approx(stop / 6));
  CHECK(a.curve[19].mean_similarity == doctest::Approx(a.mean_similarity));

  cfg.n_targets = 0;
  CHECK_THROWS_AS(run_simulated_study(mini().net, sim_world(), cfg), ConfigError);
  cfg = {};
  cfg.max_iters = 21;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // The summary of shorter horizons reuses the same traces.
  const auto traces = trace_targets(mini().net, sim_world(), 4, 20, 5);
  StudyConfig shorter;
  shorter.n_targets = 4;
  shorter.max_iters = 10;
  const StudyReport s = summarise_traces(traces, shorter);
  CHECK(s.curve.size() == 10);
  for (std::size_t t = 0; t < traces.size(); ++t) CHECK(s.targets[t].similarity == traces[t].similarities[9]);
}

TEST_CASE("report export and summary round trip") {
  StudyConfig cfg;
  cfg.n_targets = 5;
  StudyReport r = run_simulated_study(mini().net, sim_world(), cfg);
  r.identification_rate = 62.5;
  r.ablation_curves["baseline"] = log_of({{0.5, 0.5}, {0.6, 0.7}});
  r.ablation_curves["+NUM"] = log_of({{0.4, 0.4}, {0.7, 0.6}, {0.75, 0.65}});

  const auto dir = std::filesystem::temp_directory_path() / "mindface_test_report";
  std::filesystem::remove_all(dir);
  export_report(r, dir);
  const std::string summary = slurp(dir / "summary.json");
  const std::string targets = slurp(dir / "targets.csv");
  CHECK(count_lines(targets) == 1 + 5);
  CHECK(count_lines(slurp(dir / "curve.csv")) == 1 + 20);
  CHECK(count_lines(slurp(dir / "ablation.csv")) == 1 + 5);
  CHECK(targets.rfind("index,category,similarity", 0) == 0);

  export_report(r, dir);
  CHECK(slurp(dir / "summary.json") == summary);
  CHECK(slurp(dir / "targets.csv") == targets);

  const StudyReport back = read_report_summary(dir);
  CHECK(back.targets.empty());
  CHECK(back.mean_similarity == r.mean_similarity);
  CHECK(back.std_similarity == r.std_similarity);
  CHECK(back.mean_stop_iteration == r.mean_stop_iteration);
  CHECK(back.stop_histogram == r.stop_histogram);
  CHECK(back.identification_rate == r.identification_rate);
  CHECK_FALSE(back.top3_rate.has_value());
  REQUIRE(back.curve.size() == r.curve.size());
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    CHECK(back.curve[i].mean_similarity == r.curve[i].mean_similarity);
    CHECK(back.curve[i].mean_change == r.curve[i].mean_change);
  }
  CHECK(back.ablation_curves.size() == 2);
  CHECK(back.ablation_curves.at("+NUM")[2].val_similarity == 0.75);

  auto j = report_summary(r);
  CHECK(j["schema_version"] == kReportSchemaVersion);
  j["schema_version"] = kReportSchemaVersion + 1;
  CHECK_THROWS_AS(report_from_summary(j), FormatError);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_report_summary(dir), NotFound);
}

TEST_CASE("ablation bookkeeping") {
  AblationConfig cfg;
  const auto v = ablation_variants(cfg);
  REQUIRE(v.size() == 4);
  CHECK(v[0].label == "baseline");
  CHECK(v[1].label == "+TE");
  CHECK(v[2].label == "+VI");
  CHECK(v[3].label == "+NUM");
  CHECK_FALSE(v[0].tuned_embedding);
  CHECK(v[1].tuned_embedding);
  CHECK_FALSE(v[1].train.variable_iterations);
  CHECK(v[2].train.variable_iterations);
  CHECK(v[2].train.sigma == 0.0);
  CHECK(v[3].train.sigma == cfg.num_sigma);
  for (const auto& x : v) CHECK(x.train.steps == cfg.train.steps);
  cfg.num_sigma = -1.0;
  CHECK_THROWS_AS(ablation_variants(cfg), ConfigError);

  const auto rising_then_falling = log_of({{0.5, 0.5}, {0.8, 0.6}, {0.7, 0.7}, {0.6, 0.8}});
  const auto s = summarise_log("x", rising_then_falling);
  CHECK(s.peak_val_similarity == 0.8);
  CHECK(s.peak_step == 500);
  CHECK(s.final_val_similarity == 0.6);
  CHECK(shows_overfitting(rising_then_falling, 0.1));
  CHECK_FALSE(shows_overfitting(rising_then_falling, 0.3));
  CHECK_FALSE(shows_overfitting(log_of({{0.5, 0.5}, {0.6, 0.6}, {0.7, 0.7}}), 0.01));
  CHECK_FALSE(shows_overfitting(log_of({{0.5, 0.5}, {0.8, 0.9}, {0.6, 0.4}}), 0.1));
  CHECK_THROWS_AS(summarise_log("x", {}), InvalidArgument);

  const StudyReport r = ablation_report({s, summarise_log("y", log_of({{0.1, 0.1}}))});
  CHECK(r.ablation_curves.size() == 2);
  CHECK(r.targets.empty());
}

TEST_CASE("training logs round trip through CSV") {
  const auto path = std::filesystem::temp_directory_path() / "mindface_test_train_log.csv";
  std::vector<recon::TrainLogRow> log;
  Rng rng = make_rng(19);
  for (int i = 0; i < 12; ++i) {
    log.push_back({i * 250, uniform(rng, -1.0, 2.0), uniform(rng, 0.0, 1.0), uniform(rng, -1.0, 2.0),
                   uniform(rng, 0.0, 1.0) / 3.0});
  }
  recon::write_train_log(log, path);
  CHECK(recon::read_train_log(path) == log);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(recon::read_train_log(path), NotFound);
}
