#include <doctest.h>

#include "checks.hpp"
#include "mindface/embedding/finetune.hpp"
#include "mindface/errors.hpp"
#include "mindface/user/user_model.hpp"

#include <array>
#include <cmath>

using namespace mindface;
using namespace mindface::embedding;

namespace {

// Plain scalar forward pass over the parameter tensors.
Vector scalar_embed(const EmbeddingNet& net, const Vector& x) {
  const auto p = net.params();
  auto layer = [&](const Vector& in, int li, bool squash) {
    const Matrix& w = p[2 * li]->value;
    const Matrix& b = p[2 * li + 1]->value;
    Vector out(w.cols());
    for (Eigen::Index o = 0; o < w.cols(); ++o) {
      double acc = b(0, o);
      for (Eigen::Index i = 0; i < w.rows(); ++i) acc += in(i) * w(i, o);
      out(o) = squash ? std::tanh(acc) : acc;
    }
    return out;
  };
  Vector z = layer(layer(layer(x, 0, true), 1, true), 2, false);
  double norm = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) norm += z(i) * z(i);
  return z / std::sqrt(norm);
}

face::FaceParams test_face() {
  const face::Generator g;
  face::Latent w(32);
  for (int i = 0; i < 32; ++i) w(i) = std::sin(1.0 + i);
  return g.decode_params(w);
}

face::AuxiliarySet set_from_params(const std::array<face::FaceParams, 6>& faces) {
  face::AuxiliarySet s;
  for (int k = 0; k < 6; ++k) s.faces[k] = face::render(faces[k]);
  return s;
}

}  // namespace

TEST_CASE("embeddings are unit norm and identical faces have cosine one") {
  const EmbeddingNet net(EmbeddingConfig{});
  const face::Generator g;
  Rng rng = make_rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto p = g.decode_params(g.sample_latent(rng));
    const Embedding e = net.embed(p);
    CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cosine(e, net.embed(p)) == doctest::Approx(1.0).epsilon(1e-15));
  }
  Vector wild = Vector::Constant(18, 1e3);
  CHECK(net.embed_observable(wild).norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(net.embed_observable(Vector::Zero(17)), InvalidArgument);
}

TEST_CASE("embedding forward matches a scalar reimplementation and the frozen fixture") {
  const EmbeddingNet net(EmbeddingConfig{});
  const face::FaceParams p = test_face();
  const Embedding e = net.embed(p);
  const Vector s = scalar_embed(net, p.observable());
  CHECK((e - s).cwiseAbs().maxCoeff() < 1e-12);
  // frozen with init seed 1
  const std::array<double, 16> golden = {
      0.11005901128820408,  -0.13878139920415758, -0.33336741338007431, -0.26563302818797035,
      -0.35156403722253454, -0.15427192126383024, -0.26963527583920571, -0.24616980244380238,
      0.12539462309632479,  0.082360346925922118, 0.2332880394852663,   0.082499066870057744,
      0.089903950156436443, -0.44602299038848875, 0.38499736915216931,  -0.2593328008929276};
  for (int i = 0; i < 16; ++i) CHECK(e(i) == doctest::Approx(golden[i]).epsilon(1e-12));
}

TEST_CASE("oracle similarity examples") {
  const OracleConfig cfg;
  const face::FaceParams a = test_face();
  CHECK(oracle_similarity(a, a, cfg) == 0.0);
  face::FaceParams b = a;
  b.nuisance = Vector::Constant(4, 0.99);
  CHECK(oracle_similarity(a, b, cfg) == 0.0);

  // weights (2,1,1) on three features, zero elsewhere
  OracleConfig three;
  three.identity_weights = Vector::Zero(face::kIdentityDim);
  three.identity_weights.head(3) << 2.0, 1.0, 1.0;
  face::FaceParams x, y;
  x.identity.head(3) << 0.2, 0.7, 0.4;
  y.identity.head(3) << 0.5, 0.6, 0.9;
  // -(2 * 0.09 + 0.01 + 0.25) = -0.44
  CHECK(oracle_similarity(x, y, three) == doctest::Approx(-0.44).epsilon(1e-14));
  CHECK(oracle_similarity(y, x, three) == oracle_similarity(x, y, three));

  // default weights: eyes, nose and mouth slots count double
  const Vector w = OracleConfig::default_weights();
  CHECK(w(static_cast<int>(face::Feature::EyeSize)) == 2.0);
  CHECK(w(static_cast<int>(face::Feature::NoseWidth)) == 2.0);
  CHECK(w(static_cast<int>(face::Feature::MouthWidth)) == 2.0);
  CHECK(w(static_cast<int>(face::Feature::FaceWidth)) == 1.0);
  CHECK(cfg.nuisance_weights.isZero(0.0));
  OracleConfig bad;
  bad.nuisance_weights(0) = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("oracle similarity ignores any nuisance perturbation") {
  const face::Generator g;
  Rng rng = make_rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto a = g.decode_params(g.sample_latent(rng));
    const auto b = g.decode_params(g.sample_latent(rng));
    face::FaceParams a2 = a;
    for (int k = 0; k < 4; ++k) a2.nuisance(k) = uniform(rng, 0.0, 1.0);
    CHECK(oracle_similarity(a, b) == oracle_similarity(a2, b));
  }
}

TEST_CASE("noiseless oracle ranking sorts by oracle similarity") {
  OracleConfig cfg;
  cfg.sigma_h = 0.0;
  const face::Generator g;
  Rng rng = make_rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto target = g.decode_params(g.sample_latent(rng));
    std::array<face::FaceParams, 6> faces;
    std::array<double, 6> sims;
    for (int k = 0; k < 6; ++k) {
      faces[k] = g.decode_params(g.sample_latent(rng));
      sims[k] = oracle_similarity(target, faces[k], cfg);
    }
    CHECK(oracle_ranking(target, faces, cfg, rng) == rank_by_scores(sims));
  }
}

TEST_CASE("triplet generation counts") {
  const face::Generator g;
  Rng rng = make_rng(4);
  const auto pools = face::build_aux_pools(g, rng);
  const face::Category cat{0, 1};
  const auto target = g.decode_params(g.sample_latent(rng, cat));

  std::vector<RankedSet> one = {{&pools.set(cat, 1), Ranking()}};
  CHECK(generate_triplets(target, one).size() == 15);

  std::vector<RankedSet> all;
  for (int i = 1; i <= 20; ++i) all.emplace_back(&pools.set(cat, i), Ranking());
  CHECK(generate_triplets(target, all).size() == 300);

  const std::array<int, 6> order = {3, 1, 4, 0, 5, 2};
  std::vector<RankedSet> r = {{&pools.set(cat, 2), Ranking(order)}};
  const auto triplets = generate_triplets(target, r);
  const Vector face3 = pools.set(cat, 2).faces[3].params.observable();
  int as_positive = 0, as_negative = 0;
  for (const auto& t : triplets) {
    CHECK(t.anchor == target.observable());
    as_positive += t.positive == face3;
    as_negative += t.negative == face3;
  }
  CHECK(as_positive == 5);
  CHECK(as_negative == 0);
  // the last-ranked face is never a positive
  const Vector face2 = pools.set(cat, 2).faces[2].params.observable();
  int last_pos = 0;
  for (const auto& t : triplets) last_pos += t.positive == face2;
  CHECK(last_pos == 0);
}

TEST_CASE("malformed rankings are rejected") {
  const std::array<int, 6> dup = {0, 1, 2, 3, 4, 4};
  CHECK_THROWS_AS(Ranking{std::span<const int>(dup)}, InvalidArgument);
  const std::array<int, 5> short_order = {0, 1, 2, 3, 4};
  CHECK_THROWS_AS(Ranking{std::span<const int>(short_order)}, InvalidArgument);
}

TEST_CASE("triplet loss examples") {
  Embedding a(2), p(2), n(2);
  a << 1.0, 0.0;
  n << 0.0, 1.0;
  // p = a and |a - n|^2 = 2 >= m
  CHECK(triplet_loss(a, a, n, 0.1) == 0.0);
  // p = n: distances cancel
  CHECK(triplet_loss(a, n, n, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(triplet_loss(a, n, n, 0.0) == 0.0);
  // |a - p|^2 = 0.50, |a - n|^2 = 0.45, m = 0.1 -> 0.15
  Embedding pa(1), pp(1), pn(1);
  pa << 0.0;
  pp << std::sqrt(0.50);
  pn << std::sqrt(0.45);
  CHECK(triplet_loss(pa, pp, pn, 0.1) == doctest::Approx(0.15).epsilon(1e-12));

  Rng rng = make_rng(5);
  for (int t = 0; t < 200; ++t) {
    Embedding x(4), y(4), z(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = standard_normal(rng);
      y(i) = standard_normal(rng);
      z(i) = standard_normal(rng);
    }
    x.normalize();
    y.normalize();
    z.normalize();
    CHECK(triplet_loss(x, y, z, 0.1) >= 0.0);
    CHECK(triplet_loss(x, y, y, 0.1) == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("embedding gradients match finite differences at 20 points") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EmbeddingNet probe([] {
      EmbeddingConfig c;
      c.hidden_dim = 16;
      c.embedding_dim = 8;
      return c;
    }());
    CHECK(nn::parameter_count(std::as_const(probe).params()) <= 2000);
    const auto g = testing::embedding_gradient_point(seed);
    INFO("seed " << seed << " worst " << g.worst_param << " ratio " << g.worst_ratio);
    CHECK(g.checked > 0);
    CHECK(g.failures == 0);
  }
}

TEST_CASE("batch triplet gradient matches finite differences") {
  const face::Generator g;
  Rng rng = make_rng(6);
  EmbeddingConfig c;
  c.hidden_dim = 12;
  c.embedding_dim = 6;
  EmbeddingNet net(c);
  std::vector<Triplet> batch;
  for (int t = 0; t < 6; ++t) {
    batch.push_back({g.decode_params(g.sample_latent(rng)).observable(), g.decode_params(g.sample_latent(rng)).observable(),
                     g.decode_params(g.sample_latent(rng)).observable()});
  }
  // A large margin keeps every hinge active, so the loss is smooth.
  const double margin = 5.0;
  auto loss = [&]() {
    double s = 0.0;
    for (const auto& t : batch) {
      s += triplet_loss(net.embed_observable(t.anchor), net.embed_observable(t.positive), net.embed_observable(t.negative), margin);
    }
    return s / batch.size();
  };
  auto grad = [&]() {
    nn::zero_grads(net.params());
    const double l = triplet_batch_loss_grad(net, batch, margin);
    CHECK(l == doctest::Approx(loss()).epsilon(1e-12));
  };
  const auto res = testing::check_gradients(net.params(), loss, grad);
  INFO("worst " << res.worst_param << " " << res.worst_ratio);
  CHECK(res.failures == 0);
}

TEST_CASE("fine-tuning behaviour") {
  const face::Generator g;
  Rng rng = make_rng(7);
  const auto pools = face::build_aux_pools(g, rng);
  const OracleConfig oracle;
  const EmbeddingNet base(EmbeddingConfig{});

  SUBCASE("zero epochs leave the weights unchanged") {
    Rng r = make_rng(8);
    const auto triplets = collect_oracle_triplets(g, pools, oracle, 1, r);
    FinetuneConfig cfg;
    cfg.epochs = 0;
    const auto res = finetune(base, triplets, cfg);
    const auto a = base.params();
    const auto b = res.net.params();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    CHECK_THROWS_AS(finetune(base, {}, FinetuneConfig{}), InvalidArgument);
  }

  SUBCASE("10,000 oracle triplets improve held-out satisfaction and ranking alignment") {
    Rng r = make_rng(9);
    const auto train = collect_oracle_triplets(g, pools, oracle, 34, r);
    CHECK(train.size() >= 10000);
    Rng h = make_rng(10);
    const auto held_out = collect_oracle_triplets(g, pools, oracle, 10, h);
    const FinetuneConfig cfg;
    const auto res = finetune(base, train, cfg);
    CHECK(res.final_loss <= res.initial_loss);
    CHECK(res.initial_loss == doctest::Approx(mean_triplet_loss(base, train, cfg.margin)));

    const double before = triplet_satisfaction(base, held_out, cfg.margin);
    const double after = triplet_satisfaction(res.net, held_out, cfg.margin);
    INFO("satisfaction " << before << " -> " << after);
    CHECK(after > before);

    // Kendall tau against noiseless oracle rankings over 500 instances.
    OracleConfig exact = oracle;
    exact.sigma_h = 0.0;
    Rng t = make_rng(11);
    double tau_base = 0.0, tau_tuned = 0.0;
    for (int i = 0; i < 500; ++i) {
      const auto target = g.decode_params(g.sample_latent(t));
      std::array<face::FaceParams, 6> faces;
      for (auto& f : faces) f = g.decode_params(g.sample_latent(t));
      const auto set = set_from_params(faces);
      const Ranking truth = oracle_ranking(target, faces, exact, t);
      tau_base += user::kendall_tau(user::rank_faces(set, target, base, 0.0, t), truth);
      tau_tuned += user::kendall_tau(user::rank_faces(set, target, res.net, 0.0, t), truth);
    }
    INFO("tau " << tau_base / 500 << " -> " << tau_tuned / 500);
    CHECK(tau_tuned > tau_base);

    // determinism under a fixed seed and batch order
    const auto again = finetune(base, train, cfg);
    CHECK(again.epoch_losses == res.epoch_losses);
  }
}
