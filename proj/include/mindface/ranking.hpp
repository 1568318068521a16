#pragma once

#include <array>
#include <span>
#include <vector>

namespace mindface {

inline constexpr int kRankedFaces = 6;

// A permutation of the six candidate indices; position 0 is the face judged
// most similar to the target.
class Ranking {
 public:
  Ranking();  // identity order
  // Throws InvalidArgument unless `order` is a permutation of 0..5.
  explicit Ranking(std::span<const int> order);

  int operator[](int position) const { return order_[position]; }
  const std::array<int, kRankedFaces>& order() const { return order_; }
  // position_of(face) is the rank (0-based) the face received.
  int position_of(int face) const;
  Ranking reversed() const;

  bool operator==(const Ranking&) const = default;

  static bool is_permutation(std::span<const int> order);

 private:
  std::array<int, kRankedFaces> order_;
};

// Indices sorted by score, highest first; equal scores keep ascending index.
Ranking rank_by_scores(std::span<const double> scores);

}  // namespace mindface
