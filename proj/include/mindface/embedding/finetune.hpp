#pragma once

#include "mindface/embedding/triplets.hpp"
#include "mindface/nn/adam.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mindface::embedding {

struct FinetuneConfig {
  double margin = 0.1;
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  int batch = 32;
  int epochs = 20;
  std::uint64_t seed = 11;
};

struct FinetuneResult {
  EmbeddingNet net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
  int best_epoch = 0;  // 0 = the unmodified input net
};

// Mean triplet loss over `batch`; accumulates the gradient of that mean into
// the net's parameter gradients.
double triplet_batch_loss_grad(EmbeddingNet& net, std::span<const Triplet> batch, double margin);

// Adam on the triplet margin loss. Batches are drawn from a per-epoch shuffle
// seeded by cfg.seed. Returns the epoch snapshot with the lowest training
// loss, so final_loss <= initial_loss.
FinetuneResult finetune(const EmbeddingNet& net, const std::vector<Triplet>& triplets,
                        const FinetuneConfig& cfg);

}  // namespace mindface::embedding
