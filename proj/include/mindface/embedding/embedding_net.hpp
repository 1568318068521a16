#pragma once

#include "mindface/face/generator.hpp"
#include "mindface/nn/layers.hpp"

#include <cstdint>

namespace mindface::embedding {

using Embedding = Vector;

struct EmbeddingConfig {
  int input_dim = face::kIdentityDim + face::kNuisanceDim;
  int hidden_dim = 32;
  int embedding_dim = 16;
  std::uint64_t init_seed = 1;
};

struct EmbeddingCache {
  Matrix x, h1_pre, h1, h2_pre, h2, z;
  Vector norms;
  Matrix e;
};

// Face embedding E: observable face vector -> tanh MLP -> unit sphere.
class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  explicit EmbeddingNet(const EmbeddingConfig& cfg);

  const EmbeddingConfig& config() const { return cfg_; }

  Embedding embed(const face::FaceParams& face) const;
  Embedding embed_observable(const Vector& observable) const;

  // Rows of `x` are observable vectors; returns unit rows.
  Matrix forward(const Matrix& x, EmbeddingCache& cache) const;
  // Accumulates parameter gradients from dL/d(embeddings); writes dL/dx if
  // `dx` is non-null.
  void backward(const Matrix& de, const EmbeddingCache& cache, Matrix* dx);
  // Input gradient only, leaving parameter gradients untouched.
  Matrix backward_input(const Matrix& de, const EmbeddingCache& cache) const;

  nn::ParamRefs params();
  nn::ConstParamRefs params() const;

 private:
  Matrix backward_to_z(const Matrix& de, const EmbeddingCache& cache) const;

  EmbeddingConfig cfg_;
  nn::Linear l1_, l2_, l3_;
};

double cosine(const Vector& a, const Vector& b);

}  // namespace mindface::embedding
