#include "mindface/nn/transformer.hpp"

#include "mindface/errors.hpp"

namespace mindface::nn {

EncoderBlock::EncoderBlock(const std::string& name, int dim, int ff_dim, Rng& rng)
    : ln1(name + ".ln1", dim),
      wq(name + ".attn.q", dim, dim, rng),
      wk(name + ".attn.k", dim, dim, rng),
      wv(name + ".attn.v", dim, dim, rng),
      wo(name + ".attn.o", dim, dim, rng),
      ln2(name + ".ln2", dim),
      ff1(name + ".ff1", dim, ff_dim, rng),
      ff2(name + ".ff2", ff_dim, dim, rng) {}

void EncoderBlock::collect(ParamRefs& out) {
  ln1.collect(out);
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
  ln2.collect(out);
  ff1.collect(out);
  ff2.collect(out);
}

void EncoderBlock::collect(ConstParamRefs& out) const {
  ln1.collect(out);
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
  ln2.collect(out);
  ff1.collect(out);
  ff2.collect(out);
}

TransformerEncoder::TransformerEncoder(const std::string& name, int dim, int blocks, int heads,
                                       int ff_dim, Rng& rng)
    : dim_(dim), heads_(heads), final_ln_(name + ".final_ln", dim) {
  if (dim % heads != 0) throw ConfigError("model dim must be divisible by head count");
  blocks_.reserve(blocks);
  for (int b = 0; b < blocks; ++b) {
    blocks_.emplace_back(name + ".block" + std::to_string(b), dim, ff_dim, rng);
  }
}

void TransformerEncoder::forward(const Matrix& x, std::span<const kernels::SeqSpan> seqs, Matrix& y,
                                 EncoderCache& cache) const {
  cache.blocks.resize(blocks_.size());
  Matrix cur = x;
  Matrix tmp;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const EncoderBlock& blk = blocks_[i];
    EncoderBlockCache& c = cache.blocks[i];
    c.x = cur;
    blk.ln1.forward(c.x, c.a, c.ln1);
    blk.wq.forward(c.a, c.q);
    blk.wk.forward(c.a, c.k);
    blk.wv.forward(c.a, c.v);
    kernels::attention_forward(c.q, c.k, c.v, seqs, heads_, c.ctx, c.probs);
    blk.wo.forward(c.ctx, tmp);
    c.h = c.x + tmp;
    blk.ln2.forward(c.h, c.b, c.ln2);
    blk.ff1.forward(c.b, c.f_pre);
    kernels::gelu_forward(c.f_pre, c.f_act);
    blk.ff2.forward(c.f_act, tmp);
    cur = c.h + tmp;
  }
  cache.pre_norm = std::move(cur);
  final_ln_.forward(cache.pre_norm, y, cache.final_ln);
}

void TransformerEncoder::backward(const Matrix& dy, std::span<const kernels::SeqSpan> seqs,
                                  const EncoderCache& cache, Matrix& dx) {
  Matrix grad;
  final_ln_.backward(dy, cache.final_ln, grad);
  Matrix d_act, d_pre, d_b, d_ctx, dq, dk, dv, tmp, d_a;
  for (std::size_t ri = blocks_.size(); ri-- > 0;) {
    EncoderBlock& blk = blocks_[ri];
    const EncoderBlockCache& c = cache.blocks[ri];
    // feed-forward branch; grad currently holds dL/dy_block
    blk.ff2.backward(c.f_act, grad, &d_act);
    kernels::gelu_backward(c.f_pre, d_act, d_pre);
    blk.ff1.backward(c.b, d_pre, &d_b);
    blk.ln2.backward(d_b, c.ln2, tmp);
    Matrix dh = grad + tmp;
    // attention branch
    blk.wo.backward(c.ctx, dh, &d_ctx);
    kernels::attention_backward(c.q, c.k, c.v, c.probs, d_ctx, seqs, heads_, dq, dk, dv);
    blk.wq.backward(c.a, dq, &d_a);
    blk.wk.backward(c.a, dk, &tmp);
    d_a += tmp;
    blk.wv.backward(c.a, dv, &tmp);
    d_a += tmp;
    blk.ln1.backward(d_a, c.ln1, tmp);
    grad = dh + tmp;
  }
  dx = std::move(grad);
}

void TransformerEncoder::collect(ParamRefs& out) {
  for (EncoderBlock& b : blocks_) b.collect(out);
  final_ln_.collect(out);
}

void TransformerEncoder::collect(ConstParamRefs& out) const {
  for (const EncoderBlock& b : blocks_) b.collect(out);
  final_ln_.collect(out);
}

}  // namespace mindface::nn
