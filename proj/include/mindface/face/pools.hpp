#pragma once

#include "mindface/face/render.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <vector>

namespace mindface::face {

inline constexpr int kFacesPerSet = 6;
inline constexpr int kMaxIterations = 20;

struct AuxiliarySet {
  int iteration = 1;  // 1-based
  std::array<FaceImage, kFacesPerSet> faces;
};

// Predefined candidate sets, one pool of 20 sets per category. Immutable
// after construction and shared by every session.
class AuxiliaryPools {
 public:
  AuxiliaryPools() = default;
  explicit AuxiliaryPools(std::array<std::vector<AuxiliarySet>, kCategoryCount> pools)
      : pools_(std::move(pools)) {}

  const std::vector<AuxiliarySet>& pool(Category c) const { return pools_.at(c.index()); }
  // `iteration` is 1-based.
  const AuxiliarySet& set(Category c, int iteration) const;
  std::size_t total_faces() const;

  nlohmann::json to_json() const;
  static AuxiliaryPools from_json(const nlohmann::json& j, const Generator& generator);

 private:
  std::array<std::vector<AuxiliarySet>, kCategoryCount> pools_;
};

AuxiliaryPools build_aux_pools(const Generator& generator, Rng& rng,
                               int sets_per_category = kMaxIterations);

void save_pools(const AuxiliaryPools& pools, const std::filesystem::path& path);
AuxiliaryPools load_pools(const std::filesystem::path& path, const Generator& generator);

nlohmann::json latent_to_json(const Latent& w);
Latent latent_from_json(const nlohmann::json& j);

}  // namespace mindface::face
