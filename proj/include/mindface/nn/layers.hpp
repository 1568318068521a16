#pragma once

#include "mindface/rng.hpp"
#include "mindface/types.hpp"

#include <string>
#include <vector>

namespace mindface::nn {

// A named trainable tensor with its gradient accumulator. Biases and
// vectors are stored as 1 x n matrices so every parameter has one type.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string name_, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name_)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParamRefs = std::vector<Param*>;
using ConstParamRefs = std::vector<const Param*>;

void zero_grads(const ParamRefs& params);
std::size_t parameter_count(const ConstParamRefs& params);

void xavier_uniform(Matrix& w, Rng& rng);

// y = x W + b, W stored [in x out].
struct Linear {
  Param weight;
  Param bias;

  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng);

  int in_dim() const { return static_cast<int>(weight.value.rows()); }
  int out_dim() const { return static_cast<int>(weight.value.cols()); }

  void forward(const Matrix& x, Matrix& y) const;
  // Accumulates parameter gradients; writes dx when non-null.
  void backward(const Matrix& x, const Matrix& dy, Matrix* dx);

  void collect(ParamRefs& out) { out.push_back(&weight); out.push_back(&bias); }
  void collect(ConstParamRefs& out) const { out.push_back(&weight); out.push_back(&bias); }
};

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

struct LayerNorm {
  static constexpr double kEps = 1e-5;
  Param gamma;
  Param beta;

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  void forward(const Matrix& x, Matrix& y, LayerNormCache& cache) const;
  void backward(const Matrix& dy, const LayerNormCache& cache, Matrix& dx);

  void collect(ParamRefs& out) { out.push_back(&gamma); out.push_back(&beta); }
  void collect(ConstParamRefs& out) const { out.push_back(&gamma); out.push_back(&beta); }
};

}  // namespace mindface::nn
