#include "mindface/recon/reconstruction_net.hpp"

#include "mindface/errors.hpp"

#include <cmath>

namespace mindface::recon {

namespace {
constexpr int kSetSeq = kRankedFaces + 1;  // cls + six latents
}

Matrix ranked_latents(const face::AuxiliarySet& set, const Ranking& ranking) {
  const auto dim = set.faces[0].latent.size();
  Matrix out(kRankedFaces, dim);
  for (int r = 0; r < kRankedFaces; ++r) out.row(r) = set.faces[ranking[r]].latent.transpose();
  return out;
}

Matrix stack_history(std::span<const RankedIteration> history) {
  if (history.empty()) throw InvalidArgument("empty ranking history");
  for (const RankedIteration& it : history)
    if (it.set == nullptr) throw InvalidArgument("history entry without auxiliary set");
  const auto dim = history.front().set->faces[0].latent.size();
  Matrix out(kRankedFaces * static_cast<Eigen::Index>(history.size()), dim);
  for (std::size_t i = 0; i < history.size(); ++i)
    out.middleRows(kRankedFaces * static_cast<Eigen::Index>(i), kRankedFaces) =
        ranked_latents(*history[i].set, history[i].ranking);
  return out;
}

Matrix sinusoidal_positions(int positions, int dim) {
  Matrix pe(positions, dim);
  for (int p = 0; p < positions; ++p) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(p, i) = (i % 2 == 0) ? std::sin(p * freq) : std::cos(p * freq);
    }
  }
  return pe;
}

ReconstructionNet::ReconstructionNet(const ReconConfig& cfg) : cfg_(cfg) {
  if (cfg.max_iters < 1 || cfg.max_iters > face::kMaxIterations) {
    throw ConfigError("max_iters must lie in [1, 20]");
  }
  Rng rng = make_rng(cfg.init_seed);
  const int m = cfg.model_dim;
  in_proj_ = nn::Linear("in_proj", cfg.latent_dim, m, rng);
  cls1_ = nn::Param("iteration.cls", 1, m);
  for (Eigen::Index j = 0; j < m; ++j) cls1_.value(0, j) = 0.02 * standard_normal(rng);
  enc1_ = nn::TransformerEncoder("iteration", m, cfg.blocks, cfg.heads, cfg.ff_mult * m, rng);
  siamese_ = nn::Linear("iteration.head", m, m, rng);
  cls2_ = nn::Param("aggregate.cls", 1, m);
  for (Eigen::Index j = 0; j < m; ++j) cls2_.value(0, j) = 0.02 * standard_normal(rng);
  enc2_ = nn::TransformerEncoder("aggregate", m, cfg.blocks, cfg.heads, cfg.ff_mult * m, rng);
  out_ = nn::Linear("output", m, cfg.latent_dim, rng);
  pos_ = sinusoidal_positions(std::max(cfg.max_iters, kRankedFaces) + 1, m);
}

Matrix ReconstructionNet::forward(const Matrix& latents, std::span<const ExampleSpan> examples,
                                  ForwardCache& c, bool pad_to_max) const {
  if (latents.cols() != cfg_.latent_dim) throw InvalidArgument("latent dimension mismatch");
  if (latents.rows() % kRankedFaces != 0 || latents.rows() == 0) {
    throw InvalidArgument("latents must hold six rows per set");
  }
  const int n_sets = static_cast<int>(latents.rows() / kRankedFaces);
  const int m = cfg_.model_dim;
  for (const ExampleSpan& e : examples) {
    if (e.n_sets < 1 || e.n_sets > cfg_.max_iters || e.first_set < 0 || e.first_set + e.n_sets > n_sets) {
      throw InvalidArgument("example must span 1..max_iters stacked sets");
    }
  }

  // stage one: every set is an independent 7-token sequence
  c.latents = latents;
  Matrix proj;
  in_proj_.forward(latents, proj);
  c.tokens1.resize(static_cast<Eigen::Index>(n_sets) * kSetSeq, m);
  c.seqs1.resize(n_sets);
  for (int s = 0; s < n_sets; ++s) {
    const Eigen::Index base = static_cast<Eigen::Index>(s) * kSetSeq;
    c.tokens1.row(base) = cls1_.value.row(0) + pos_.row(0);
    c.tokens1.middleRows(base + 1, kRankedFaces) =
        proj.middleRows(static_cast<Eigen::Index>(s) * kRankedFaces, kRankedFaces) +
        pos_.middleRows(1, kRankedFaces);
    c.seqs1[s] = {static_cast<int>(base), kSetSeq, kSetSeq};
  }
  enc1_.forward(c.tokens1, c.seqs1, c.enc1_out, c.enc1);
  c.set_cls.resize(n_sets, m);
  for (int s = 0; s < n_sets; ++s) c.set_cls.row(s) = c.enc1_out.row(static_cast<Eigen::Index>(s) * kSetSeq);
  siamese_.forward(c.set_cls, c.features);

  // stage two: one sequence per example, cls at position 0
  c.examples.assign(examples.begin(), examples.end());
  c.seqs2.resize(examples.size());
  int rows = 0;
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const int len = pad_to_max ? cfg_.max_iters + 1 : examples[b].n_sets + 1;
    c.seqs2[b] = {rows, len, examples[b].n_sets + 1};
    rows += len;
  }
  c.tokens2.setZero(rows, m);
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const kernels::SeqSpan& seq = c.seqs2[b];
    c.tokens2.row(seq.offset) = cls2_.value.row(0);
    c.tokens2.middleRows(seq.offset + 1, examples[b].n_sets) =
        c.features.middleRows(examples[b].first_set, examples[b].n_sets);
    c.tokens2.middleRows(seq.offset, seq.length) += pos_.topRows(seq.length);
  }
  enc2_.forward(c.tokens2, c.seqs2, c.enc2_out, c.enc2);
  c.agg_cls.resize(static_cast<Eigen::Index>(examples.size()), m);
  for (std::size_t b = 0; b < examples.size(); ++b) c.agg_cls.row(b) = c.enc2_out.row(c.seqs2[b].offset);
  Matrix out;
  out_.forward(c.agg_cls, out);
  return out;
}

void ReconstructionNet::backward(const Matrix& d_out, ForwardCache& c) {
  const int m = cfg_.model_dim;
  Matrix d_agg;
  out_.backward(c.agg_cls, d_out, &d_agg);

  Matrix d_enc2_out = Matrix::Zero(c.enc2_out.rows(), m);
  for (std::size_t b = 0; b < c.examples.size(); ++b) d_enc2_out.row(c.seqs2[b].offset) = d_agg.row(b);
  Matrix d_tokens2;
  enc2_.backward(d_enc2_out, c.seqs2, c.enc2, d_tokens2);

  Matrix d_features = Matrix::Zero(c.features.rows(), m);
  for (std::size_t b = 0; b < c.examples.size(); ++b) {
    const kernels::SeqSpan& seq = c.seqs2[b];
    cls2_.grad.row(0) += d_tokens2.row(seq.offset);
    d_features.middleRows(c.examples[b].first_set, c.examples[b].n_sets) +=
        d_tokens2.middleRows(seq.offset + 1, c.examples[b].n_sets);
  }
  Matrix d_set_cls;
  siamese_.backward(c.set_cls, d_features, &d_set_cls);

  const auto n_sets = c.set_cls.rows();
  Matrix d_enc1_out = Matrix::Zero(c.enc1_out.rows(), m);
  for (Eigen::Index s = 0; s < n_sets; ++s) d_enc1_out.row(s * kSetSeq) = d_set_cls.row(s);
  Matrix d_tokens1;
  enc1_.backward(d_enc1_out, c.seqs1, c.enc1, d_tokens1);

  Matrix d_proj(n_sets * kRankedFaces, m);
  for (Eigen::Index s = 0; s < n_sets; ++s) {
    cls1_.grad.row(0) += d_tokens1.row(s * kSetSeq);
    d_proj.middleRows(s * kRankedFaces, kRankedFaces) = d_tokens1.middleRows(s * kSetSeq + 1, kRankedFaces);
  }
  in_proj_.backward(c.latents, d_proj, nullptr);
}

face::Latent ReconstructionNet::reconstruct(std::span<const RankedIteration> history) const {
  if (history.empty()) throw InvalidArgument("reconstruct: empty history");
  if (static_cast<int>(history.size()) > cfg_.max_iters) throw InvalidArgument("reconstruct: history too long");
  ForwardCache cache;
  const ExampleSpan ex{0, static_cast<int>(history.size())};
  return forward(stack_history(history), std::span(&ex, 1), cache).row(0).transpose();
}

std::vector<face::Latent> ReconstructionNet::reconstruct_prefixes(
    std::span<const RankedIteration> history) const {
  if (history.empty()) throw InvalidArgument("reconstruct: empty history");
  if (static_cast<int>(history.size()) > cfg_.max_iters) throw InvalidArgument("reconstruct: history too long");
  std::vector<ExampleSpan> prefixes;
  for (int i = 1; i <= static_cast<int>(history.size()); ++i) prefixes.push_back({0, i});
  ForwardCache cache;
  const Matrix out = forward(stack_history(history), prefixes, cache);
  std::vector<face::Latent> result;
  for (Eigen::Index r = 0; r < out.rows(); ++r) result.push_back(out.row(r).transpose());
  return result;
}

nn::ParamRefs ReconstructionNet::params() {
  nn::ParamRefs out;
  in_proj_.collect(out);
  out.push_back(&cls1_);
  enc1_.collect(out);
  siamese_.collect(out);
  out.push_back(&cls2_);
  enc2_.collect(out);
  out_.collect(out);
  return out;
}

nn::ConstParamRefs ReconstructionNet::params() const {
  nn::ConstParamRefs out;
  in_proj_.collect(out);
  out.push_back(&cls1_);
  enc1_.collect(out);
  siamese_.collect(out);
  out.push_back(&cls2_);
  enc2_.collect(out);
  out_.collect(out);
  return out;
}

}  // namespace mindface::recon
