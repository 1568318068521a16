#include "mindface/errors.hpp"
#include "mindface/kernels/kernels.hpp"

#include "common.hpp"

#include <cmath>

namespace mindface::kernels::reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  out.setZero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index p = 0; p < a.cols(); ++p)
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += a(i, p) * b(p, j);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  out.setZero(a.cols(), b.cols());
  for (Eigen::Index p = 0; p < a.rows(); ++p)
    for (Eigen::Index i = 0; i < a.cols(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += a(p, i) * b(p, j);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  out.setZero(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index p = 0; p < a.cols(); ++p) acc += a(i, p) * b(j, p);
      out(i, j) = acc;
    }
}

void add_row_bias(Matrix& x, const Matrix& bias) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += bias(0, j);
}

void accumulate_bias_grad(const Matrix& dy, Matrix& bias_grad) {
  for (Eigen::Index i = 0; i < dy.rows(); ++i)
    for (Eigen::Index j = 0; j < dy.cols(); ++j) bias_grad(0, j) += dy(i, j);
}

void layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                        Matrix& y, Matrix& xhat, Vector& inv_std) {
  const Eigen::Index n = x.cols();
  y.resize(x.rows(), n);
  xhat.resize(x.rows(), n);
  inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) mean += x(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) var += (x(r, j) - mean) * (x(r, j) - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(r) = is;
    for (Eigen::Index j = 0; j < n; ++j) {
      xhat(r, j) = (x(r, j) - mean) * is;
      y(r, j) = xhat(r, j) * gamma(0, j) + beta(0, j);
    }
  }
}

void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Matrix& gamma, Matrix& dx, Matrix& dgamma, Matrix& dbeta) {
  const Eigen::Index n = dy.cols();
  dx.resize(dy.rows(), n);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    double mean_g = 0.0;
    double mean_gx = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = dy(r, j) * gamma(0, j);
      mean_g += g;
      mean_gx += g * xhat(r, j);
    }
    mean_g /= static_cast<double>(n);
    mean_gx /= static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = dy(r, j) * gamma(0, j);
      dx(r, j) = inv_std(r) * (g - mean_g - xhat(r, j) * mean_gx);
      dgamma(0, j) += dy(r, j) * xhat(r, j);
      dbeta(0, j) += dy(r, j);
    }
  }
}

void gelu_forward(const Matrix& x, Matrix& y) {
  y.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) y(i, j) = detail::gelu(x(i, j));
}

void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx) {
  dx.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) dx(i, j) = dy(i, j) * detail::gelu_grad(x(i, j));
}

void attention_forward(const Matrix& q, const Matrix& k, const Matrix& v,
                       std::span<const SeqSpan> seqs, int heads, Matrix& ctx,
                       ProbBuffer& probs) {
  const int width = static_cast<int>(q.cols());
  if (width % heads != 0) throw InvalidArgument("attention width not divisible by heads");
  const int hd = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  probs.assign(attention_prob_size(seqs, heads), 0.0);
  ctx.setZero(q.rows(), q.cols());
  std::size_t base = 0;
  for (const SeqSpan& seq : seqs) {
    for (int h = 0; h < heads; ++h) {
      double* p = probs.data() + base;
      for (int i = 0; i < seq.length; ++i) {
        double mx = -INFINITY;
        for (int j = 0; j < seq.valid; ++j) {
          double acc = 0.0;
          for (int d = 0; d < hd; ++d)
            acc += q(seq.offset + i, h * hd + d) * k(seq.offset + j, h * hd + d);
          p[i * seq.valid + j] = acc * scale;
          mx = std::max(mx, acc * scale);
        }
        double total = 0.0;
        for (int j = 0; j < seq.valid; ++j) {
          p[i * seq.valid + j] = std::exp(p[i * seq.valid + j] - mx);
          total += p[i * seq.valid + j];
        }
        for (int j = 0; j < seq.valid; ++j) p[i * seq.valid + j] /= total;
        for (int d = 0; d < hd; ++d) {
          double acc = 0.0;
          for (int j = 0; j < seq.valid; ++j) acc += p[i * seq.valid + j] * v(seq.offset + j, h * hd + d);
          ctx(seq.offset + i, h * hd + d) = acc;
        }
      }
      base += static_cast<std::size_t>(seq.length) * seq.valid;
    }
  }
}

void attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                        const ProbBuffer& probs, const Matrix& dctx,
                        std::span<const SeqSpan> seqs, int heads, Matrix& dq, Matrix& dk,
                        Matrix& dv) {
  const int hd = static_cast<int>(q.cols()) / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  dq.setZero(q.rows(), q.cols());
  dk.setZero(k.rows(), k.cols());
  dv.setZero(v.rows(), v.cols());
  std::size_t base = 0;
  for (const SeqSpan& seq : seqs) {
    for (int h = 0; h < heads; ++h) {
      const double* p = probs.data() + base;
      for (int i = 0; i < seq.length; ++i) {
        std::vector<double> dp(seq.valid, 0.0);
        double dot = 0.0;
        for (int j = 0; j < seq.valid; ++j) {
          for (int d = 0; d < hd; ++d) {
            dp[j] += dctx(seq.offset + i, h * hd + d) * v(seq.offset + j, h * hd + d);
            dv(seq.offset + j, h * hd + d) += p[i * seq.valid + j] * dctx(seq.offset + i, h * hd + d);
          }
          dot += dp[j] * p[i * seq.valid + j];
        }
        for (int j = 0; j < seq.valid; ++j) {
          const double ds = p[i * seq.valid + j] * (dp[j] - dot) * scale;
          for (int d = 0; d < hd; ++d) {
            dq(seq.offset + i, h * hd + d) += ds * k(seq.offset + j, h * hd + d);
            dk(seq.offset + j, h * hd + d) += ds * q(seq.offset + i, h * hd + d);
          }
        }
      }
      base += static_cast<std::size_t>(seq.length) * seq.valid;
    }
  }
}

}  // namespace mindface::kernels::reference
