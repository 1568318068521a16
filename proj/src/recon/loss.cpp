#include "mindface/recon/loss.hpp"

#include "mindface/errors.hpp"

namespace mindface::recon {
namespace {

struct DecodeCache {
  Matrix squashed;  // B x (P+Q)
};

Matrix decode_batch(const face::Generator& g, const Matrix& w, DecodeCache& cache) {
  const int used = g.observable_dim();
  const double s = g.config().squash_gain;
  const Matrix pre = w * g.mixing().topRows(used).transpose();
  cache.squashed = pre.unaryExpr([s](double x) { return face::sigmoid(s * x); });
  return cache.squashed;
}

Matrix decode_batch_backward(const face::Generator& g, const DecodeCache& cache, const Matrix& d_obs) {
  const int used = g.observable_dim();
  const double s = g.config().squash_gain;
  const Matrix d_pre = (d_obs.array() * s * cache.squashed.array() * (1.0 - cache.squashed.array())).matrix();
  return d_pre * g.mixing().topRows(used);
}

void check(const LossContext& ctx) {
  if (ctx.generator == nullptr || ctx.embedder == nullptr) throw InvalidArgument("loss context incomplete");
}

}  // namespace

Matrix embed_latents(const face::Generator& generator, const embedding::EmbeddingNet& embedder,
                     const Matrix& w) {
  DecodeCache dc;
  embedding::EmbeddingCache ec;
  return embedder.forward(decode_batch(generator, w, dc), ec);
}

LossTerms reconstruction_loss_terms(const Matrix& w_rec, const Matrix& w_target,
                                    const Matrix& target_embeddings, const LossContext& ctx) {
  check(ctx);
  if (w_rec.rows() != w_target.rows() || w_rec.cols() != w_target.cols()) {
    throw InvalidArgument("reconstruction loss: dimension mismatch");
  }
  const Matrix e = embed_latents(*ctx.generator, *ctx.embedder, w_rec);
  LossTerms t;
  t.cosine.resize(w_rec.rows());
  t.loss.resize(w_rec.rows());
  for (Eigen::Index b = 0; b < w_rec.rows(); ++b) {
    t.cosine(b) = embedding::cosine(e.row(b).transpose(), target_embeddings.row(b).transpose());
    t.loss(b) = (w_rec.row(b) - w_target.row(b)).squaredNorm() / static_cast<double>(w_rec.cols()) -
                ctx.lambda_e * t.cosine(b);
  }
  return t;
}

double reconstruction_loss(const face::Latent& w_rec, const face::Latent& w_target,
                           const LossContext& ctx) {
  check(ctx);
  if (w_rec.size() != w_target.size()) throw InvalidArgument("reconstruction loss: dimension mismatch");
  const Matrix t = w_target.transpose();
  const Matrix et = embed_latents(*ctx.generator, *ctx.embedder, t);
  return reconstruction_loss_terms(w_rec.transpose(), t, et, ctx).loss(0);
}

double reconstruction_loss_grad(const Matrix& w_rec, const Matrix& w_target,
                                const Matrix& target_embeddings, const LossContext& ctx,
                                Matrix& d_w_rec) {
  check(ctx);
  if (w_rec.rows() != w_target.rows() || w_rec.cols() != w_target.cols()) {
    throw InvalidArgument("reconstruction loss: dimension mismatch");
  }
  const auto batch = w_rec.rows();
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double inv_d = 1.0 / static_cast<double>(w_rec.cols());

  DecodeCache dc;
  embedding::EmbeddingCache ec;
  const Matrix obs = decode_batch(*ctx.generator, w_rec, dc);
  const Matrix e = ctx.embedder->forward(obs, ec);

  double total = 0.0;
  Matrix d_e(batch, e.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double ne = e.row(b).norm();
    const double nt = target_embeddings.row(b).norm();
    const double cos = embedding::cosine(e.row(b).transpose(), target_embeddings.row(b).transpose());
    total += (w_rec.row(b) - w_target.row(b)).squaredNorm() * inv_d - ctx.lambda_e * cos;
    // d cos / d e = t/(|e||t|) - cos e/|e|^2
    d_e.row(b) = -ctx.lambda_e * inv_b *
                 (target_embeddings.row(b) / (ne * nt) - cos * e.row(b) / (ne * ne));
  }
  const Matrix d_obs = ctx.embedder->backward_input(d_e, ec);
  d_w_rec = decode_batch_backward(*ctx.generator, dc, d_obs);
  d_w_rec += (2.0 * inv_d * inv_b) * (w_rec - w_target);
  return total * inv_b;
}

double embedding_similarity(const face::Latent& a, const face::Latent& b,
                            const embedding::EmbeddingNet& embedder,
                            const face::Generator& generator) {
  return embedding::cosine(embedder.embed(generator.decode_params(a)),
                           embedder.embed(generator.decode_params(b)));
}

double mean_abs_change(const face::Latent& prev, const face::Latent& cur) {
  if (prev.size() != cur.size()) throw InvalidArgument("latent dimension mismatch");
  return (prev - cur).cwiseAbs().sum() / static_cast<double>(prev.size());
}

bool should_stop(const face::Latent& prev, const face::Latent& cur, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  return mean_abs_change(prev, cur) < alpha;
}

face::Latent baseline_rank_weighted(const Matrix& stacked) {
  if (stacked.rows() == 0 || stacked.rows() % kRankedFaces != 0) {
    throw InvalidArgument("baseline: empty or malformed history");
  }
  const auto n_sets = stacked.rows() / kRankedFaces;
  face::Latent acc = face::Latent::Zero(stacked.cols());
  for (Eigen::Index s = 0; s < n_sets; ++s) {
    for (int r = 0; r < kRankedFaces; ++r) {
      acc += (static_cast<double>(kRankedFaces - r) / 21.0) * stacked.row(s * kRankedFaces + r).transpose();
    }
  }
  return acc / static_cast<double>(n_sets);
}

face::Latent baseline_rank_weighted(std::span<const RankedIteration> history) {
  return baseline_rank_weighted(stack_history(history));
}

}  // namespace mindface::recon
