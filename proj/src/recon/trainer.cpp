#include "mindface/recon/trainer.hpp"

#include "mindface/common/checkpoint.hpp"
#include "mindface/common/csv.hpp"
#include "mindface/errors.hpp"

#include <algorithm>

namespace mindface::recon {
namespace {

constexpr int kEvalChunk = 64;

// Seed streams for the independent random processes of one run.
enum Stream : std::uint64_t { kTrainTargets = 1, kValTargets = 2, kTrainEval = 3, kBatches = 4 };

std::vector<face::Latent> sample_targets(const face::Generator& g, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<face::Latent> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(g.sample_latent(rng));
  return out;
}

void check_world(const SimulationWorld& w) {
  if (!w.generator || !w.pools || !w.user_embedder || !w.loss_embedder || !w.eval_embedder) {
    throw InvalidArgument("simulation world incomplete");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (lambda_e < 0.0) throw ConfigError("lambda_e must be >= 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (max_iters < 1 || max_iters > face::kMaxIterations) throw ConfigError("max_iters must lie in [1, 20]");
  if (batch < 1 || steps < 0 || n_targets < 1) throw ConfigError("batch, steps, n_targets invalid");
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  if (eval_every < 1 || n_val < 1 || n_train_eval < 1) throw ConfigError("evaluation sizes invalid");
}

std::vector<RankedIteration> history_of(const face::AuxiliaryPools& pools,
                                        const SimulatedTarget& target, int iterations) {
  std::vector<RankedIteration> h;
  for (int i = 1; i <= iterations; ++i) h.push_back({&pools.set(target.category, i), target.rankings.at(i - 1)});
  return h;
}

std::vector<SimulatedTarget> simulate_rater_targets(const SimulationWorld& world, int n, int iterations,
                                                    std::uint64_t seed) {
  check_world(world);
  std::vector<SimulatedTarget> out(n);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n; ++t) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    SimulatedTarget& st = out[t];
    st.latent = world.generator->sample_latent(rng);
    const face::FaceParams params = world.generator->decode_params(st.latent);
    st.category = face::category_of_params(params);
    for (int i = 1; i <= iterations; ++i) {
      const face::AuxiliarySet& set = world.pools->set(st.category, i);
      std::array<face::FaceParams, kRankedFaces> faces;
      for (int k = 0; k < kRankedFaces; ++k) faces[k] = set.faces[k].params;
      st.rankings.push_back(embedding::oracle_ranking(params, faces, world.rater, rng));
    }
  }
  return out;
}

std::vector<SimulatedTarget> simulate_model_targets(const SimulationWorld& world, int n,
                                                    int iterations, double sigma, std::uint64_t seed) {
  check_world(world);
  const user::PoolEmbeddings cache(*world.pools, *world.user_embedder);
  std::vector<SimulatedTarget> out(n);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n; ++t) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    SimulatedTarget& st = out[t];
    st.latent = world.generator->sample_latent(rng);
    const face::FaceParams params = world.generator->decode_params(st.latent);
    st.category = face::category_of_params(params);
    const embedding::Embedding et = world.user_embedder->embed(params);
    for (int i = 1; i <= iterations; ++i) {
      st.rankings.push_back(
          user::rank_by_similarity(user::set_similarities(et, cache.set(st.category, i)), sigma, rng));
    }
  }
  return out;
}

EvalMetrics evaluate(const ReconstructionNet& net, const SimulationWorld& world,
                     const std::vector<SimulatedTarget>& targets, int iterations, double lambda_e) {
  check_world(world);
  if (targets.empty()) throw InvalidArgument("evaluate: no targets");
  const LossContext ctx{world.generator, world.loss_embedder, lambda_e};
  const int dim = world.generator->latent_dim();
  EvalMetrics m;
  for (std::size_t start = 0; start < targets.size(); start += kEvalChunk) {
    const std::size_t end = std::min(targets.size(), start + kEvalChunk);
    const auto b = static_cast<Eigen::Index>(end - start);
    Matrix latents(b * iterations * kRankedFaces, dim);
    Matrix w_target(b, dim);
    std::vector<ExampleSpan> spans;
    for (std::size_t t = start; t < end; ++t) {
      const auto row = static_cast<Eigen::Index>(t - start);
      const auto history = history_of(*world.pools, targets[t], iterations);
      latents.middleRows(row * iterations * kRankedFaces, iterations * kRankedFaces) = stack_history(history);
      w_target.row(row) = targets[t].latent.transpose();
      spans.push_back({static_cast<int>(row) * iterations, iterations});
    }
    ForwardCache cache;
    const Matrix w_rec = net.forward(latents, spans, cache);
    const Matrix loss_emb = embed_latents(*world.generator, *world.loss_embedder, w_target);
    m.loss += reconstruction_loss_terms(w_rec, w_target, loss_emb, ctx).loss.sum();
    const Matrix eval_rec = embed_latents(*world.generator, *world.eval_embedder, w_rec);
    const Matrix eval_tgt = embed_latents(*world.generator, *world.eval_embedder, w_target);
    for (Eigen::Index r = 0; r < b; ++r)
      m.similarity += embedding::cosine(eval_rec.row(r).transpose(), eval_tgt.row(r).transpose());
  }
  m.loss /= static_cast<double>(targets.size());
  m.similarity /= static_cast<double>(targets.size());
  return m;
}

TrainResult train(const ReconConfig& net_cfg, const TrainConfig& cfg, const SimulationWorld& world) {
  cfg.validate();
  check_world(world);
  if (net_cfg.latent_dim != world.generator->latent_dim()) throw ConfigError("latent dim mismatch");
  if (net_cfg.max_iters < cfg.max_iters) throw ConfigError("network supports fewer iterations than training uses");

  TrainResult result;
  ReconstructionNet net(net_cfg);
  const nn::ParamRefs params = net.params();
  nn::Adam adam(cfg.adam);
  const LossContext ctx{world.generator, world.loss_embedder, cfg.lambda_e};
  const int dim = world.generator->latent_dim();

  // fixed training targets and their cached embeddings
  const auto targets = sample_targets(*world.generator, cfg.n_targets, derive_seed(cfg.seed, kTrainTargets));
  const user::PoolEmbeddings pool_emb(*world.pools, *world.user_embedder);
  Matrix target_mat(cfg.n_targets, dim);
  for (int t = 0; t < cfg.n_targets; ++t) target_mat.row(t) = targets[t].transpose();
  const Matrix user_emb = embed_latents(*world.generator, *world.user_embedder, target_mat);
  const Matrix loss_emb = embed_latents(*world.generator, *world.loss_embedder, target_mat);
  std::vector<face::Category> cats(cfg.n_targets);
  for (int t = 0; t < cfg.n_targets; ++t) cats[t] = world.generator->category_of(targets[t]);

  const auto val_targets = simulate_rater_targets(world, cfg.n_val, cfg.max_iters, derive_seed(cfg.seed, kValTargets));
  // training-distribution rankings for a fixed subset of the training targets
  std::vector<SimulatedTarget> train_eval;
  {
    Rng rng = make_rng(derive_seed(cfg.seed, kTrainEval));
    const int n = std::min(cfg.n_train_eval, cfg.n_targets);
    for (int t = 0; t < n; ++t) {
      SimulatedTarget st{targets[t], cats[t], {}};
      const embedding::Embedding et = user_emb.row(t).transpose();
      for (int i = 1; i <= cfg.max_iters; ++i)
        st.rankings.push_back(user::rank_by_similarity(user::set_similarities(et, pool_emb.set(cats[t], i)), cfg.sigma, rng));
      train_eval.push_back(std::move(st));
    }
  }

  auto log_point = [&](int step) {
    const EvalMetrics val = evaluate(net, world, val_targets, cfg.max_iters, cfg.lambda_e);
    const EvalMetrics tr = evaluate(net, world, train_eval, cfg.max_iters, cfg.lambda_e);
    result.log.push_back({step, tr.loss, val.similarity, val.loss, tr.similarity});
    if (step == 0 || val.loss < result.best_val_loss) {
      result.best_val_loss = val.loss;
      result.best_step = step;
      result.net = net;
      round_to_f32(result.net.params());
    }
  };
  log_point(0);

  Rng rng = make_rng(derive_seed(cfg.seed, kBatches));
  std::uniform_int_distribution<int> pick_target(0, cfg.n_targets - 1);
  std::uniform_int_distribution<int> pick_iters(1, cfg.max_iters);
  Matrix latents;
  Matrix w_target(cfg.batch, dim);
  Matrix t_emb(cfg.batch, loss_emb.cols());
  std::vector<ExampleSpan> spans(cfg.batch);
  std::vector<int> chosen(cfg.batch);
  std::vector<int> iters(cfg.batch);
  Matrix d_out;
  ForwardCache cache;
  result.step_losses.reserve(cfg.steps);

  for (int step = 1; step <= cfg.steps; ++step) {
    int total_sets = 0;
    for (int b = 0; b < cfg.batch; ++b) {
      chosen[b] = pick_target(rng);
      iters[b] = cfg.variable_iterations ? pick_iters(rng) : cfg.max_iters;
      spans[b] = {total_sets, iters[b]};
      total_sets += iters[b];
    }
    latents.resize(static_cast<Eigen::Index>(total_sets) * kRankedFaces, dim);
    for (int b = 0; b < cfg.batch; ++b) {
      const int t = chosen[b];
      const embedding::Embedding et = user_emb.row(t).transpose();
      for (int i = 1; i <= iters[b]; ++i) {
        const Ranking r = user::rank_by_similarity(user::set_similarities(et, pool_emb.set(cats[t], i)), cfg.sigma, rng);
        latents.middleRows(static_cast<Eigen::Index>(spans[b].first_set + i - 1) * kRankedFaces, kRankedFaces) =
            ranked_latents(world.pools->set(cats[t], i), r);
      }
      w_target.row(b) = target_mat.row(t);
      t_emb.row(b) = loss_emb.row(t);
    }
    nn::zero_grads(params);
    const Matrix w_rec = net.forward(latents, spans, cache);
    const double loss = reconstruction_loss_grad(w_rec, w_target, t_emb, ctx, d_out);
    net.backward(d_out, cache);
    adam.step(params);
    result.step_losses.push_back(loss);
    if (step % cfg.eval_every == 0 || step == cfg.steps) log_point(step);
  }
  return result;
}

void write_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const TrainLogRow& r : log) {
    rows.push_back({std::to_string(r.step), format_number(r.train_loss), format_number(r.val_similarity),
                    format_number(r.val_loss), format_number(r.train_similarity)});
  }
  write_csv(path, {"step", "train_loss", "val_embedding_similarity", "val_loss", "train_embedding_similarity"},
            rows);
}

std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path) {
  const auto steps = read_csv_column(path, "step");
  const auto train_loss = read_csv_column(path, "train_loss");
  const auto val_sim = read_csv_column(path, "val_embedding_similarity");
  const auto val_loss = read_csv_column(path, "val_loss");
  const auto train_sim = read_csv_column(path, "train_embedding_similarity");
  std::vector<TrainLogRow> log(steps.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    log[i] = {static_cast<int>(steps[i]), train_loss[i], val_sim[i], val_loss[i], train_sim[i]};
  }
  return log;
}

}  // namespace mindface::recon
