#pragma once

// Two-stage set aggregation network. Stage one (shared "Siamese" encoder)
// reads each iteration's six ranked latents plus a learnable cls token and
// emits one feature vector per iteration; stage two reads the sequence of
// iteration features plus a second cls token and emits the reconstructed
// latent.

#include "mindface/face/pools.hpp"
#include "mindface/nn/transformer.hpp"
#include "mindface/ranking.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mindface::recon {

struct ReconConfig {
  int latent_dim = 32;
  int model_dim = 64;
  int blocks = 2;
  int heads = 4;
  int ff_mult = 4;
  int max_iters = face::kMaxIterations;
  std::uint64_t init_seed = 3;
};

// One completed ranking iteration.
struct RankedIteration {
  const face::AuxiliarySet* set = nullptr;
  Ranking ranking;
};

// 6 x D matrix of the set's latents, best-ranked first.
Matrix ranked_latents(const face::AuxiliarySet& set, const Ranking& ranking);
// Stacks iterations into a (6 i) x D matrix.
Matrix stack_history(std::span<const RankedIteration> history);

// Slice of the stacked iteration-feature rows that forms one example.
struct ExampleSpan {
  int first_set = 0;
  int n_sets = 0;
};

struct ForwardCache {
  Matrix latents;  // (6 S) x D
  std::vector<kernels::SeqSpan> seqs1;
  Matrix tokens1, enc1_out;
  nn::EncoderCache enc1;
  Matrix set_cls, features;  // S x M
  std::vector<ExampleSpan> examples;
  std::vector<kernels::SeqSpan> seqs2;
  Matrix tokens2, enc2_out;
  nn::EncoderCache enc2;
  Matrix agg_cls;  // B x M
};

class ReconstructionNet {
 public:
  ReconstructionNet() = default;
  explicit ReconstructionNet(const ReconConfig& cfg);

  const ReconConfig& config() const { return cfg_; }

  face::Latent reconstruct(std::span<const RankedIteration> history) const;
  // Reconstruction after each prefix 1..i of the history (stage one runs once).
  std::vector<face::Latent> reconstruct_prefixes(std::span<const RankedIteration> history) const;

  // Batched forward. `latents` stacks every set of every example, six rows
  // per set; `examples` partitions those sets. With pad_to_max, stage two
  // runs on fixed-length sequences with masked padding slots. Returns B x D.
  Matrix forward(const Matrix& latents, std::span<const ExampleSpan> examples, ForwardCache& cache,
                 bool pad_to_max = false) const;
  // Accumulates parameter gradients from dL/d(output).
  void backward(const Matrix& d_out, ForwardCache& cache);

  nn::ParamRefs params();
  nn::ConstParamRefs params() const;

  // Direct access used by tests (e.g. zeroing the output map).
  nn::Linear& output_layer() { return out_; }

 private:
  ReconConfig cfg_;
  nn::Linear in_proj_;
  nn::Param cls1_;
  nn::TransformerEncoder enc1_;
  nn::Linear siamese_;
  nn::Param cls2_;
  nn::TransformerEncoder enc2_;
  nn::Linear out_;
  Matrix pos_;  // (max_iters + 1) x M sinusoidal encodings
};

Matrix sinusoidal_positions(int positions, int dim);

}  // namespace mindface::recon
