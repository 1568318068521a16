#include <doctest.h>

#include "checks.hpp"
#include "mindface/common/artifacts.hpp"
#include "mindface/common/checkpoint.hpp"
#include "mindface/errors.hpp"
#include "mindface/recon/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace mindface;
using namespace mindface::recon;

namespace {

struct Fixture {
  face::Generator generator;
  face::AuxiliaryPools pools;
  embedding::EmbeddingNet embedder{embedding::EmbeddingConfig{}};
  Fixture() {
    Rng rng = make_rng(5);
    pools = face::build_aux_pools(generator, rng);
  }
  SimulationWorld world() const { return {&generator, &pools, &embedder, &embedder, &embedder, {}}; }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::vector<RankedIteration> random_history(const face::AuxiliaryPools& pools, face::Category cat, int n, Rng& rng) {
  std::vector<RankedIteration> h;
  for (int i = 1; i <= n; ++i) {
    std::array<int, 6> order{};
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    h.push_back({&pools.set(cat, i), Ranking(order)});
  }
  return h;
}

ReconConfig small_net() {
  ReconConfig c;
  c.model_dim = 16;
  c.blocks = 1;
  c.heads = 2;
  c.ff_mult = 2;
  return c;
}

double scalar_cosine(const Vector& a, const Vector& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    ab += a(i) * b(i);
    aa += a(i) * a(i);
    bb += b(i) * b(i);
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("a zero output map reconstructs the zero latent") {
  const Fixture& f = fixture();
  ReconstructionNet net(small_net());
  net.output_layer().weight.value.setZero();
  net.output_layer().bias.value.setZero();
  Rng rng = make_rng(1);
  for (int n : {1, 5, 20}) {
    const auto h = random_history(f.pools, face::Category{1, 0}, n, rng);
    CHECK(net.reconstruct(h).isZero(0.0));
  }
}

TEST_CASE("reconstruction depends on the rank order within an iteration") {
  const Fixture& f = fixture();
  const ReconstructionNet net(ReconConfig{});
  Rng rng = make_rng(2);
  for (int t = 0; t < 10; ++t) {
    auto h = random_history(f.pools, face::Category{0, 1}, 3, rng);
    const face::Latent a = net.reconstruct(h);
    h[1].ranking = h[1].ranking.reversed();
    const face::Latent b = net.reconstruct(h);
    CHECK((a - b).norm() > 1e-6);
  }
}

TEST_CASE("padded and unpadded forward passes agree") {
  const Fixture& f = fixture();
  const ReconstructionNet net(ReconConfig{});
  Rng rng = make_rng(3);
  for (int n = 1; n <= 20; ++n) {
    const auto h = random_history(f.pools, face::Category{1, 1}, n, rng);
    const Matrix stacked = stack_history(h);
    const ExampleSpan ex{0, n};
    ForwardCache c1, c2;
    const Matrix plain = net.forward(stacked, std::span(&ex, 1), c1, false);
    const Matrix padded = net.forward(stacked, std::span(&ex, 1), c2, true);
    CHECK((plain - padded).cwiseAbs().maxCoeff() < 1e-6);
  }
  // mixed batch of ragged examples equals each example alone
  const auto h = random_history(f.pools, face::Category{0, 0}, 9, rng);
  const Matrix stacked = stack_history(h);
  const std::vector<ExampleSpan> examples = {{0, 3}, {3, 1}, {4, 5}};
  ForwardCache cache;
  const Matrix batch = net.forward(stacked, examples, cache, true);
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const std::span<const RankedIteration> part(h.data() + examples[e].first_set, examples[e].n_sets);
    CHECK((batch.row(e).transpose() - net.reconstruct(part)).cwiseAbs().maxCoeff() < 1e-6);
  }
  // prefixes computed together match each prefix alone
  const auto prefixes = net.reconstruct_prefixes(h);
  REQUIRE(prefixes.size() == 9);
  for (int i = 1; i <= 9; ++i) {
    const std::span<const RankedIteration> part(h.data(), i);
    CHECK((prefixes[i - 1] - net.reconstruct(part)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("reconstruct rejects empty and over-long histories") {
  const Fixture& f = fixture();
  const ReconstructionNet net(small_net());
  CHECK_THROWS_AS(net.reconstruct(std::vector<RankedIteration>{}), InvalidArgument);
  Rng rng = make_rng(4);
  auto h = random_history(f.pools, face::Category{0, 0}, 20, rng);
  h.push_back(h.front());
  CHECK_THROWS_AS(net.reconstruct(h), InvalidArgument);
}

TEST_CASE("positional encodings are sinusoidal") {
  const Matrix p = sinusoidal_positions(21, 8);
  CHECK(p.rows() == 21);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == 1.0);
  CHECK(p(3, 0) == doctest::Approx(std::sin(3.0)));
  CHECK(p(3, 1) == doctest::Approx(std::cos(3.0)));
  CHECK(p(5, 2) == doctest::Approx(std::sin(5.0 / std::pow(10000.0, 2.0 / 8.0))));
}

TEST_CASE("full-loss gradients match finite differences at 10 points") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = testing::reconstruction_gradient_point(seed);
    INFO("seed " << seed << " worst " << g.worst_param << " ratio " << g.worst_ratio);
    CHECK(g.checked > 0);
    CHECK(g.failures == 0);
  }
}

TEST_CASE("loss examples") {
  const Fixture& f = fixture();
  Rng rng = make_rng(6);
  const face::Latent w = f.generator.sample_latent(rng);
  LossContext ctx{&f.generator, &f.embedder, 1.0};
  CHECK(reconstruction_loss(w, w, ctx) == -1.0);
  ctx.lambda_e = 2.5;
  CHECK(reconstruction_loss(w, w, ctx) == -2.5);

  ctx.lambda_e = 0.0;
  face::Latent e1 = w;
  e1(0) += 1.0;
  CHECK(reconstruction_loss(e1, w, ctx) == doctest::Approx(1.0 / 32.0).epsilon(1e-14));

  ctx.lambda_e = 1.0;
  for (int t = 0; t < 20; ++t) {
    const face::Latent a = f.generator.sample_latent(rng);
    const face::Latent b = f.generator.sample_latent(rng);
    double mse = 0.0;
    for (int i = 0; i < 32; ++i) mse += (a(i) - b(i)) * (a(i) - b(i));
    mse /= 32.0;
    const double cos = scalar_cosine(f.embedder.embed(f.generator.decode_params(a)),
                                     f.embedder.embed(f.generator.decode_params(b)));
    const double l = reconstruction_loss(a, b, ctx);
    CHECK(l == doctest::Approx(mse - cos).epsilon(1e-12));
    CHECK(l >= -1.0);
    CHECK(embedding_similarity(a, b, f.embedder, f.generator) == doctest::Approx(cos).epsilon(1e-12));
    CHECK(embedding_similarity(a, b, f.embedder, f.generator) == embedding_similarity(b, a, f.embedder, f.generator));
  }
  CHECK(embedding_similarity(w, w, f.embedder, f.generator) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(reconstruction_loss(face::Latent::Zero(31), w, ctx), InvalidArgument);
}

TEST_CASE("batched loss agrees with the single-example loss") {
  const Fixture& f = fixture();
  Rng rng = make_rng(7);
  Matrix rec(4, 32), tgt(4, 32);
  for (int r = 0; r < 4; ++r) {
    rec.row(r) = f.generator.sample_latent(rng).transpose();
    tgt.row(r) = f.generator.sample_latent(rng).transpose();
  }
  const LossContext ctx{&f.generator, &f.embedder, 1.0};
  Matrix d;
  const double batch = reconstruction_loss_grad(rec, tgt, embed_latents(f.generator, f.embedder, tgt), ctx, d);
  double mean = 0.0;
  for (int r = 0; r < 4; ++r) mean += reconstruction_loss(rec.row(r).transpose(), tgt.row(r).transpose(), ctx);
  CHECK(batch == doctest::Approx(mean / 4.0).epsilon(1e-12));
  CHECK(d.rows() == 4);
  // gradient w.r.t. the reconstructed latents by central differences
  const double h = 1e-6;
  for (int r = 0; r < 4; ++r) {
    for (int i = 0; i < 32; i += 5) {
      Matrix up = rec, down = rec;
      up(r, i) += h;
      down(r, i) -= h;
      Matrix ignore;
      const Matrix te = embed_latents(f.generator, f.embedder, tgt);
      const double num = (reconstruction_loss_grad(up, tgt, te, ctx, ignore) -
                          reconstruction_loss_grad(down, tgt, te, ctx, ignore)) / (2 * h);
      CHECK(d(r, i) == doctest::Approx(num).epsilon(1e-5));
    }
  }
}

TEST_CASE("early termination rule") {
  const face::Latent a = face::Latent::Constant(32, 0.3);
  CHECK(should_stop(a, a, 1e-12));
  CHECK(should_stop(a, a, 0.1));
  const face::Latent b = a.array() + 0.2;
  CHECK(mean_abs_change(a, b) == doctest::Approx(0.2));
  CHECK_FALSE(should_stop(a, b, 0.1));
  // strictly below alpha
  face::Latent c = a;
  c(0) += 32 * 0.1;
  CHECK(mean_abs_change(a, c) == doctest::Approx(0.1));
  CHECK(should_stop(a, c, 0.1 + 1e-9));
  CHECK_FALSE(should_stop(a, c, 0.1 - 1e-9));
  // signed changes count by magnitude
  face::Latent d = a;
  d(0) += 1.6;
  d(1) -= 1.6;
  CHECK(mean_abs_change(a, d) == doctest::Approx(0.1));
  CHECK_THROWS_AS(should_stop(a, face::Latent::Zero(31), 0.1), InvalidArgument);
  CHECK_THROWS_AS(should_stop(a, a, 0.0), InvalidArgument);
}

TEST_CASE("rank-weighted baseline") {
  Matrix same(6, 32);
  Rng rng = make_rng(8);
  const face::Generator g;
  const face::Latent w = g.sample_latent(rng);
  for (int r = 0; r < 6; ++r) same.row(r) = w.transpose();
  CHECK((baseline_rank_weighted(same) - w).cwiseAbs().maxCoeff() < 1e-14);

  // two iterations with known latents, ranked order = row order
  Matrix two = Matrix::Zero(12, 32);
  for (int r = 0; r < 6; ++r) two(r, 0) = r + 1.0;   // 1..6
  for (int r = 0; r < 6; ++r) two(6 + r, 1) = 1.0;   // all ones in dim 1
  const face::Latent b = baseline_rank_weighted(two);
  // iteration 1: (6*1 + 5*2 + 4*3 + 3*4 + 2*5 + 1*6)/21 = 56/21; halved
  CHECK(b(0) == doctest::Approx(56.0 / 21.0 / 2.0).epsilon(1e-14));
  CHECK(b(1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b(2) == 0.0);

  // the span overload uses the ranking order
  face::AuxiliarySet set;
  for (int k = 0; k < 6; ++k) {
    set.faces[k].latent = face::Latent::Zero(32);
    set.faces[k].latent(0) = k;
  }
  const std::array<int, 6> order = {5, 4, 3, 2, 1, 0};
  const std::vector<RankedIteration> h = {{&set, Ranking(order)}};
  // (6*5 + 5*4 + 4*3 + 3*2 + 2*1 + 1*0)/21 = 70/21
  CHECK(baseline_rank_weighted(h)(0) == doctest::Approx(70.0 / 21.0).epsilon(1e-14));
  CHECK_THROWS_AS(baseline_rank_weighted(std::vector<RankedIteration>{}), InvalidArgument);
}

TEST_CASE("training config validation") {
  TrainConfig c;
  c.validate();
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_iters = 21;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lambda_e = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("training loss decreases over the first 500 steps and runs are reproducible") {
  const Fixture& f = fixture();
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.n_targets = 2000;
  cfg.eval_every = 250;
  cfg.n_val = 50;
  cfg.n_train_eval = 50;
  const TrainResult res = train(ReconConfig{}, cfg, f.world());
  REQUIRE(res.step_losses.size() == 500);
  // least-squares slope of loss against step
  const double n = 500.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 500; ++i) {
    sx += i;
    sy += res.step_losses[i];
    sxx += double(i) * i;
    sxy += i * res.step_losses[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  INFO("slope " << slope);
  CHECK(slope < 0.0);
  CHECK(res.log.size() == 3);  // steps 0, 250, 500
  CHECK(res.log.front().step == 0);

  const TrainResult again = train(ReconConfig{}, cfg, f.world());
  CHECK(again.step_losses == res.step_losses);
  REQUIRE(again.log.size() == res.log.size());
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    CHECK(again.log[i].train_loss == res.log[i].train_loss);
    CHECK(again.log[i].val_similarity == res.log[i].val_similarity);
  }

  const auto dir = std::filesystem::temp_directory_path() / "mindface_test_recon";
  std::filesystem::create_directories(dir);
  write_train_log(res.log, dir / "log.csv");
  std::ifstream in(dir / "log.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("step,train_loss,val_embedding_similarity", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoints round trip through f32") {
  const Fixture& f = fixture();
  ReconstructionNet net(small_net());
  round_to_f32(net.params());
  const auto dir = std::filesystem::temp_directory_path() / "mindface_test_ckpt";
  std::filesystem::create_directories(dir);
  save_reconstructor(net, 0.037, dir / "recon");
  double alpha = 0.0;
  const ReconstructionNet back = load_reconstructor(dir / "recon", &alpha);
  CHECK(alpha == 0.037);
  Rng rng = make_rng(9);
  const auto h = random_history(f.pools, face::Category{1, 0}, 7, rng);
  CHECK(back.reconstruct(h) == net.reconstruct(h));

  const auto manifest = read_checkpoint_manifest(dir / "recon");
  CHECK(manifest["format_version"] == kCheckpointFormatVersion);
  CHECK(std::filesystem::file_size(dir / "recon.bin") == 4 * nn::parameter_count(std::as_const(net).params()));

  embedding::EmbeddingNet e(embedding::EmbeddingConfig{});
  round_to_f32(e.params());
  save_embedding(e, dir / "emb");
  const auto eb = load_embedding(dir / "emb");
  const auto p = f.generator.decode_params(f.generator.sample_latent(rng));
  CHECK(eb.embed(p) == e.embed(p));

  CHECK_THROWS(load_reconstructor(dir / "missing"));
  std::filesystem::remove_all(dir);
}
