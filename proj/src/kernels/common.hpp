#pragma once

#include "mindface/kernels/kernels.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace mindface::kernels::detail {

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// Start index of each (sequence, head) probability block.
inline std::vector<std::size_t> prob_offsets(std::span<const SeqSpan> seqs, int heads) {
  std::vector<std::size_t> offsets(seqs.size() + 1, 0);
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    offsets[s + 1] = offsets[s] + static_cast<std::size_t>(heads) * seqs[s].length * seqs[s].valid;
  }
  return offsets;
}

}  // namespace mindface::kernels::detail
