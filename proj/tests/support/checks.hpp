#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include "mindface/embedding/embedding_net.hpp"
#include "mindface/face/pools.hpp"
#include "mindface/nn/layers.hpp"
#include "mindface/recon/reconstruction_net.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace mindface::testing {

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_ratio = 0.0;  // max |analytic - numeric| / (atol + rtol |numeric|)
  std::string worst_param;
};

// Central finite differences over every entry of every parameter.
// `analytic` must zero and fill the parameter gradients of `loss`.
GradCheck check_gradients(const nn::ParamRefs& params, const std::function<double()>& loss,
                          const std::function<void()>& analytic, double h = 1e-5, double rtol = 1e-3,
                          double atol = 1e-6);

void merge(GradCheck& into, const GradCheck& other);

// Embedding net (<= 2k parameters) under a random linear read-out of the
// embeddings of random inputs, plus an always-active triplet loss.
GradCheck embedding_gradient_point(std::uint64_t seed);

// Reduced reconstruction net (M = 8, one block) under the full loss through
// the generator and a small embedding net, on a ragged two-example batch.
GradCheck reconstruction_gradient_point(std::uint64_t seed);

// Small shared world for session/service/eval tests: generator, pools and an
// untrained reconstruction net.
struct MiniWorld {
  face::Generator generator;
  face::AuxiliaryPools pools;
  embedding::EmbeddingNet embedder;
  recon::ReconstructionNet net;

  explicit MiniWorld(std::uint64_t seed = 7);
};

}  // namespace mindface::testing
