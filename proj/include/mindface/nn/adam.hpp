#pragma once

#include "mindface/nn/layers.hpp"

#include <vector>

namespace mindface::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // Applies one update from the gradients currently stored in `params`.
  // The parameter list must be the same (same order, same shapes) on
  // every call.
  void step(const ParamRefs& params);

  long steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace mindface::nn
