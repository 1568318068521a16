#pragma once

#include <cstdint>
#include <random>

namespace mindface {

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for sub-stream `stream` of a parent seed. Distinct streams give
// statistically independent generators, so parallel Monte Carlo can hand
// each task its own Rng without sharing state.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

double uniform(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);

}  // namespace mindface
