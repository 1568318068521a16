#pragma once

// Dense kernels behind the neural-network layers. Every kernel exists
// twice: the OpenMP/Eigen version in `kernels` used by the library, and a
// plain serial loop version in `kernels::reference` kept as the testing
// oracle and benchmark baseline. Both must agree to round-off.

#include "mindface/types.hpp"

#include <Eigen/StdVector>

#include <cstddef>
#include <span>
#include <vector>

namespace mindface::kernels {

// One attention sequence inside a stacked token matrix. Rows
// [offset, offset+length) belong to the sequence; only the first `valid`
// rows may be attended to (the rest are padding).
struct SeqSpan {
  int offset = 0;
  int length = 0;
  int valid = 0;
};

// Attention probabilities. The buffer is SIMD-aligned so that vectorised row
// reductions do not depend on where the allocation happens to land.
using ProbBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Number of doubles needed to hold attention probabilities.
std::size_t attention_prob_size(std::span<const SeqSpan> seqs, int heads);

void matmul(const Matrix& a, const Matrix& b, Matrix& out);     // a * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);  // a^T * b
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);  // a * b^T

void add_row_bias(Matrix& x, const Matrix& bias);
// bias_grad += column sums of dy
void accumulate_bias_grad(const Matrix& dy, Matrix& bias_grad);

void layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                        Matrix& y, Matrix& xhat, Vector& inv_std);
void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Matrix& gamma, Matrix& dx, Matrix& dgamma, Matrix& dbeta);

void gelu_forward(const Matrix& x, Matrix& y);
void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx);

// q, k, v: [rows x heads*head_dim]. probs is resized by the call.
void attention_forward(const Matrix& q, const Matrix& k, const Matrix& v,
                       std::span<const SeqSpan> seqs, int heads, Matrix& ctx,
                       ProbBuffer& probs);
void attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                        const ProbBuffer& probs, const Matrix& dctx,
                        std::span<const SeqSpan> seqs, int heads, Matrix& dq, Matrix& dk,
                        Matrix& dv);

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void add_row_bias(Matrix& x, const Matrix& bias);
void accumulate_bias_grad(const Matrix& dy, Matrix& bias_grad);
void layer_norm_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                        Matrix& y, Matrix& xhat, Vector& inv_std);
void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Matrix& gamma, Matrix& dx, Matrix& dgamma, Matrix& dbeta);
void gelu_forward(const Matrix& x, Matrix& y);
void gelu_backward(const Matrix& x, const Matrix& dy, Matrix& dx);
void attention_forward(const Matrix& q, const Matrix& k, const Matrix& v,
                       std::span<const SeqSpan> seqs, int heads, Matrix& ctx,
                       ProbBuffer& probs);
void attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                        const ProbBuffer& probs, const Matrix& dctx,
                        std::span<const SeqSpan> seqs, int heads, Matrix& dq, Matrix& dk,
                        Matrix& dv);

}  // namespace reference
}  // namespace mindface::kernels
