#include "mindface/errors.hpp"
#include "mindface/kernels/kernels.hpp"

#include "common.hpp"

#include <cmath>

namespace mindface::kernels {

std::size_t attention_prob_size(std::span<const SeqSpan> seqs, int heads) {
  return detail::prob_offsets(seqs, heads).back();
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) { out.noalias() = a * b; }

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  out.noalias() = a.transpose() * b;
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  out.noalias() = a * b.transpose();
}

void add_row_bias(Matrix& x, const Matrix& bias) { x.rowwise() += bias.row(0); }

void accumulate_bias_grad(const Matrix& dy, Matrix& bias_grad) {
  bias_grad.row(0) += dy.colwise().sum();
}

void layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                        Matrix& y, Matrix& xhat, Vector& inv_std) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  y.resize(rows, cols);
  xhat.resize(rows, cols);
  inv_std.resize(rows);
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(r) = is;
    xhat.row(r) = (x.row(r).array() - mean) * is;
    y.row(r) = xhat.row(r).array() * gamma.row(0).array() + beta.row(0).array();
  }
}

void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Matrix& gamma, Matrix& dx, Matrix& dgamma, Matrix& dbeta) {
  const Eigen::Index rows = dy.rows();
  dx.resize(dy.rows(), dy.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::ArrayXd g = (dy.row(r).array() * gamma.row(0).array()).transpose();
    const Eigen::ArrayXd xh = xhat.row(r).transpose().array();
    const double mean_g = g.mean();
    const double mean_gx = (g * xh).mean();
    dx.row(r) = (inv_std(r) * (g - mean_g - xh * mean_gx)).transpose();
  }
  dgamma.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
}

void gelu_forward(const Matrix& x, Matrix& y) {
  y.resize(x.rows(), x.cols());
  const Eigen::Index n = x.size();
  const double* src = x.data();
  double* dst = y.data();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) dst[i] = detail::gelu(src[i]);
}

void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx) {
  dx.resize(x.rows(), x.cols());
  const Eigen::Index n = x.size();
  const double* src = x.data();
  const double* g = dy.data();
  double* dst = dx.data();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) dst[i] = g[i] * detail::gelu_grad(src[i]);
}

void attention_forward(const Matrix& q, const Matrix& k, const Matrix& v,
                       std::span<const SeqSpan> seqs, int heads, Matrix& ctx,
                       ProbBuffer& probs) {
  const int width = static_cast<int>(q.cols());
  if (width % heads != 0) throw InvalidArgument("attention width not divisible by heads");
  const int head_dim = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const auto offsets = detail::prob_offsets(seqs, heads);
  probs.assign(offsets.back(), 0.0);
  ctx.setZero(q.rows(), q.cols());
  const auto n_seqs = static_cast<std::ptrdiff_t>(seqs.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < n_seqs; ++s) {
    const SeqSpan seq = seqs[s];
    std::size_t base = offsets[s];
    for (int h = 0; h < heads; ++h) {
      const auto qh = q.block(seq.offset, h * head_dim, seq.length, head_dim);
      const auto kh = k.block(seq.offset, h * head_dim, seq.valid, head_dim);
      const auto vh = v.block(seq.offset, h * head_dim, seq.valid, head_dim);
      Eigen::Map<Matrix> p(probs.data() + base, seq.length, seq.valid);
      p.noalias() = (qh * kh.transpose()) * scale;
      for (int r = 0; r < seq.length; ++r) {
        const double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp();
        p.row(r) /= p.row(r).sum();
      }
      ctx.block(seq.offset, h * head_dim, seq.length, head_dim).noalias() = p * vh;
      base += static_cast<std::size_t>(seq.length) * seq.valid;
    }
  }
}

void attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                        const ProbBuffer& probs, const Matrix& dctx,
                        std::span<const SeqSpan> seqs, int heads, Matrix& dq, Matrix& dk,
                        Matrix& dv) {
  const int width = static_cast<int>(q.cols());
  const int head_dim = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const auto offsets = detail::prob_offsets(seqs, heads);
  dq.setZero(q.rows(), q.cols());
  dk.setZero(k.rows(), k.cols());
  dv.setZero(v.rows(), v.cols());
  const auto n_seqs = static_cast<std::ptrdiff_t>(seqs.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < n_seqs; ++s) {
    const SeqSpan seq = seqs[s];
    std::size_t base = offsets[s];
    Matrix dp;
    for (int h = 0; h < heads; ++h) {
      const auto qh = q.block(seq.offset, h * head_dim, seq.length, head_dim);
      const auto kh = k.block(seq.offset, h * head_dim, seq.valid, head_dim);
      const auto vh = v.block(seq.offset, h * head_dim, seq.valid, head_dim);
      const auto gh = dctx.block(seq.offset, h * head_dim, seq.length, head_dim);
      Eigen::Map<const Matrix> p(probs.data() + base, seq.length, seq.valid);
      dv.block(seq.offset, h * head_dim, seq.valid, head_dim).noalias() = p.transpose() * gh;
      dp.noalias() = gh * vh.transpose();
      for (int r = 0; r < seq.length; ++r) {
        const double dot = dp.row(r).dot(p.row(r));
        dp.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
      }
      dq.block(seq.offset, h * head_dim, seq.length, head_dim).noalias() = (dp * kh) * scale;
      dk.block(seq.offset, h * head_dim, seq.valid, head_dim).noalias() =
          (dp.transpose() * qh) * scale;
      base += static_cast<std::size_t>(seq.length) * seq.valid;
    }
  }
}

}  // namespace mindface::kernels
