#pragma once

#include "mindface/embedding/embedding_net.hpp"
#include "mindface/face/generator.hpp"
#include "mindface/recon/reconstruction_net.hpp"

#include <span>

namespace mindface::recon {

struct LossContext {
  const face::Generator* generator = nullptr;
  const embedding::EmbeddingNet* embedder = nullptr;
  double lambda_e = 1.0;
};

// mean((w_rec - w_M)^2) - lambda_e * cos(E(G(w_rec)), E(G(w_M)))
double reconstruction_loss(const face::Latent& w_rec, const face::Latent& w_target,
                           const LossContext& ctx);

// Batched loss: rows of w_rec / w_target are examples, rows of
// target_embeddings are E(G(w_target)). Returns the batch-mean loss and
// writes its gradient w.r.t. w_rec.
double reconstruction_loss_grad(const Matrix& w_rec, const Matrix& w_target,
                                const Matrix& target_embeddings, const LossContext& ctx,
                                Matrix& d_w_rec);

// Per-row losses and cosine terms without gradients.
struct LossTerms {
  Vector loss;
  Vector cosine;
};
LossTerms reconstruction_loss_terms(const Matrix& w_rec, const Matrix& w_target,
                                    const Matrix& target_embeddings, const LossContext& ctx);

// E(G(w)) for each row of w.
Matrix embed_latents(const face::Generator& generator, const embedding::EmbeddingNet& embedder,
                     const Matrix& w);

double embedding_similarity(const face::Latent& a, const face::Latent& b,
                            const embedding::EmbeddingNet& embedder,
                            const face::Generator& generator);

// Mean absolute per-entry change between consecutive reconstructions.
double mean_abs_change(const face::Latent& prev, const face::Latent& cur);
bool should_stop(const face::Latent& prev, const face::Latent& cur, double alpha);

// Rank-weighted mean of all ranked latents: weights (6,5,4,3,2,1)/21 within
// each iteration, iterations averaged.
face::Latent baseline_rank_weighted(std::span<const RankedIteration> history);
face::Latent baseline_rank_weighted(const Matrix& stacked_latents);

}  // namespace mindface::recon
