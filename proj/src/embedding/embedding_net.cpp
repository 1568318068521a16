#include "mindface/embedding/embedding_net.hpp"

#include "mindface/errors.hpp"

#include <cmath>

namespace mindface::embedding {

EmbeddingNet::EmbeddingNet(const EmbeddingConfig& cfg) : cfg_(cfg) {
  Rng rng = make_rng(cfg.init_seed);
  l1_ = nn::Linear("embed.l1", cfg.input_dim, cfg.hidden_dim, rng);
  l2_ = nn::Linear("embed.l2", cfg.hidden_dim, cfg.hidden_dim, rng);
  l3_ = nn::Linear("embed.l3", cfg.hidden_dim, cfg.embedding_dim, rng);
}

Matrix EmbeddingNet::forward(const Matrix& x, EmbeddingCache& c) const {
  if (x.cols() != cfg_.input_dim) throw InvalidArgument("embedding input dimension mismatch");
  c.x = x;
  l1_.forward(c.x, c.h1_pre);
  c.h1 = c.h1_pre.array().tanh();
  l2_.forward(c.h1, c.h2_pre);
  c.h2 = c.h2_pre.array().tanh();
  l3_.forward(c.h2, c.z);
  c.norms = c.z.rowwise().norm();
  c.e = c.z.array().colwise() / c.norms.array();
  return c.e;
}

Matrix EmbeddingNet::backward_to_z(const Matrix& de, const EmbeddingCache& c) const {
  // e = z/|z|  =>  dz = (de - e (e . de)) / |z|
  const Vector proj = (de.array() * c.e.array()).rowwise().sum();
  Matrix dz = de - (c.e.array().colwise() * proj.array()).matrix();
  return dz.array().colwise() / c.norms.array();
}

void EmbeddingNet::backward(const Matrix& de, const EmbeddingCache& c, Matrix* dx) {
  const Matrix dz = backward_to_z(de, c);
  Matrix dh2, dh1;
  l3_.backward(c.h2, dz, &dh2);
  dh2.array() *= 1.0 - c.h2.array().square();
  l2_.backward(c.h1, dh2, &dh1);
  dh1.array() *= 1.0 - c.h1.array().square();
  l1_.backward(c.x, dh1, dx);
}

Matrix EmbeddingNet::backward_input(const Matrix& de, const EmbeddingCache& c) const {
  const Matrix dz = backward_to_z(de, c);
  Matrix dh2 = dz * l3_.weight.value.transpose();
  dh2.array() *= 1.0 - c.h2.array().square();
  Matrix dh1 = dh2 * l2_.weight.value.transpose();
  dh1.array() *= 1.0 - c.h1.array().square();
  return dh1 * l1_.weight.value.transpose();
}

Embedding EmbeddingNet::embed_observable(const Vector& observable) const {
  EmbeddingCache cache;
  return forward(observable.transpose(), cache).row(0).transpose();
}

Embedding EmbeddingNet::embed(const face::FaceParams& face) const {
  return embed_observable(face.observable());
}

nn::ParamRefs EmbeddingNet::params() {
  nn::ParamRefs out;
  l1_.collect(out);
  l2_.collect(out);
  l3_.collect(out);
  return out;
}

nn::ConstParamRefs EmbeddingNet::params() const {
  nn::ConstParamRefs out;
  l1_.collect(out);
  l2_.collect(out);
  l3_.collect(out);
  return out;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine: dimension mismatch");
  // sqrt(x*x) == x in IEEE arithmetic, so cosine(v, v) is exactly 1
  return a.dot(b) / std::sqrt(a.dot(a) * b.dot(b));
}

}  // namespace mindface::embedding
