#include "mindface/nn/layers.hpp"

#include "mindface/kernels/kernels.hpp"

#include <cmath>

namespace mindface::nn {

void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

std::size_t parameter_count(const ConstParamRefs& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void xavier_uniform(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uniform(rng, -limit, limit);
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {
  xavier_uniform(weight.value, rng);
}

void Linear::forward(const Matrix& x, Matrix& y) const {
  kernels::matmul(x, weight.value, y);
  kernels::add_row_bias(y, bias.value);
}

void Linear::backward(const Matrix& x, const Matrix& dy, Matrix* dx) {
  Matrix dw;
  kernels::matmul_tn(x, dy, dw);
  weight.grad += dw;
  kernels::accumulate_bias_grad(dy, bias.grad);
  if (dx != nullptr) kernels::matmul_nt(dy, weight.value, *dx);
}

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", 1, dim), beta(name + ".beta", 1, dim) {
  gamma.value.setOnes();
}

void LayerNorm::forward(const Matrix& x, Matrix& y, LayerNormCache& cache) const {
  kernels::layer_norm_forward(x, gamma.value, beta.value, kEps, y, cache.xhat, cache.inv_std);
}

void LayerNorm::backward(const Matrix& dy, const LayerNormCache& cache, Matrix& dx) {
  kernels::layer_norm_backward(dy, cache.xhat, cache.inv_std, gamma.value, dx, gamma.grad,
                               beta.grad);
}

}  // namespace mindface::nn
