#include "mindface/ranking.hpp"

#include "mindface/errors.hpp"

#include <algorithm>
#include <numeric>

namespace mindface {

Ranking::Ranking() { std::iota(order_.begin(), order_.end(), 0); }

Ranking::Ranking(std::span<const int> order) {
  if (!is_permutation(order)) throw InvalidArgument("ranking must be a permutation of 0..5");
  std::copy(order.begin(), order.end(), order_.begin());
}

bool Ranking::is_permutation(std::span<const int> order) {
  if (order.size() != kRankedFaces) return false;
  std::array<bool, kRankedFaces> seen{};
  for (int v : order) {
    if (v < 0 || v >= kRankedFaces || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

int Ranking::position_of(int face) const {
  for (int i = 0; i < kRankedFaces; ++i)
    if (order_[i] == face) return i;
  throw InvalidArgument("face index out of range");
}

Ranking Ranking::reversed() const {
  std::array<int, kRankedFaces> rev;
  std::reverse_copy(order_.begin(), order_.end(), rev.begin());
  return Ranking(rev);
}

Ranking rank_by_scores(std::span<const double> scores) {
  if (scores.size() != kRankedFaces) throw InvalidArgument("expected six scores");
  std::array<int, kRankedFaces> idx;
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  return Ranking(idx);
}

}  // namespace mindface
