#pragma once

#include "mindface/kernels/kernels.hpp"
#include "mindface/nn/layers.hpp"

#include <span>
#include <vector>

namespace mindface::nn {

// Pre-layer-norm encoder block:
//   h = x + Attn(LN1(x));  y = h + W2 GELU(W1 LN2(h))
struct EncoderBlock {
  LayerNorm ln1;
  Linear wq, wk, wv, wo;
  LayerNorm ln2;
  Linear ff1, ff2;

  EncoderBlock() = default;
  EncoderBlock(const std::string& name, int dim, int ff_dim, Rng& rng);

  void collect(ParamRefs& out);
  void collect(ConstParamRefs& out) const;
};

struct EncoderBlockCache {
  Matrix x, a, q, k, v, ctx, h, b, f_pre, f_act;
  LayerNormCache ln1, ln2;
  kernels::ProbBuffer probs;
};

struct EncoderCache {
  std::vector<EncoderBlockCache> blocks;
  Matrix pre_norm;
  LayerNormCache final_ln;
};

// Stack of encoder blocks followed by a final layer norm. Operates on a
// stacked token matrix; `seqs` delimits independent sequences.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(const std::string& name, int dim, int blocks, int heads, int ff_dim, Rng& rng);

  int dim() const { return dim_; }
  int heads() const { return heads_; }
  int depth() const { return static_cast<int>(blocks_.size()); }

  void forward(const Matrix& x, std::span<const kernels::SeqSpan> seqs, Matrix& y,
               EncoderCache& cache) const;
  void backward(const Matrix& dy, std::span<const kernels::SeqSpan> seqs,
                const EncoderCache& cache, Matrix& dx);

  void collect(ParamRefs& out);
  void collect(ConstParamRefs& out) const;

 private:
  int dim_ = 0;
  int heads_ = 1;
  std::vector<EncoderBlock> blocks_;
  LayerNorm final_ln_;
};

}  // namespace mindface::nn
