#pragma once

#include "mindface/embedding/oracle.hpp"
#include "mindface/nn/adam.hpp"
#include "mindface/recon/loss.hpp"
#include "mindface/recon/reconstruction_net.hpp"
#include "mindface/user/user_model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mindface::recon {

struct TrainConfig {
  double lambda_e = 1.0;
  double alpha = 0.1;
  int max_iters = face::kMaxIterations;
  nn::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
  int batch = 32;
  int steps = 12000;
  int n_targets = 20000;
  double sigma = 0.22;  // user-model noise for the simulated training rankings
  bool variable_iterations = true;
  std::uint64_t seed = 17;
  int eval_every = 500;
  int n_val = 200;
  int n_train_eval = 200;

  void validate() const;
};

// Everything training and evaluation need besides the network itself.
struct SimulationWorld {
  const face::Generator* generator = nullptr;
  const face::AuxiliaryPools* pools = nullptr;
  const embedding::EmbeddingNet* user_embedder = nullptr;  // drives simulated rankings
  const embedding::EmbeddingNet* loss_embedder = nullptr;  // E inside the training loss
  const embedding::EmbeddingNet* eval_embedder = nullptr;  // similarity metric for reports
  embedding::OracleConfig rater;                           // synthetic human raters
};

// A target with one ranking per auxiliary set of its category.
struct SimulatedTarget {
  face::Latent latent;
  face::Category category;
  std::vector<Ranking> rankings;
};

std::vector<RankedIteration> history_of(const face::AuxiliaryPools& pools,
                                        const SimulatedTarget& target, int iterations);

// Targets ranked by the synthetic human raters (noisy oracle).
std::vector<SimulatedTarget> simulate_rater_targets(const SimulationWorld& world, int n, int iterations,
                                                    std::uint64_t seed);
// Targets ranked by the embedding user model at noise sigma.
std::vector<SimulatedTarget> simulate_model_targets(const SimulationWorld& world, int n,
                                                    int iterations, double sigma, std::uint64_t seed);

struct EvalMetrics {
  double loss = 0.0;
  double similarity = 0.0;
};

// Mean loss (loss_embedder) and mean embedding similarity (eval_embedder)
// over full-length histories.
EvalMetrics evaluate(const ReconstructionNet& net, const SimulationWorld& world,
                     const std::vector<SimulatedTarget>& targets, int iterations, double lambda_e);

struct TrainLogRow {
  int step = 0;
  double train_loss = 0.0;  // loss on the fixed training-evaluation subset
  double val_similarity = 0.0;
  double val_loss = 0.0;
  double train_similarity = 0.0;

  bool operator==(const TrainLogRow&) const = default;
};

struct TrainResult {
  ReconstructionNet net;  // best validation-loss snapshot, rounded to f32
  std::vector<TrainLogRow> log;
  std::vector<double> step_losses;  // minibatch loss of every update
  int best_step = 0;
  double best_val_loss = 0.0;
};

TrainResult train(const ReconConfig& net_cfg, const TrainConfig& cfg, const SimulationWorld& world);

void write_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);
std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path);

}  // namespace mindface::recon
