#include "mindface/face/pools.hpp"

#include "mindface/errors.hpp"

#include <fstream>

namespace mindface::face {

const AuxiliarySet& AuxiliaryPools::set(Category c, int iteration) const {
  const auto& p = pool(c);
  if (iteration < 1 || iteration > static_cast<int>(p.size())) {
    throw InvalidArgument("auxiliary set iteration out of range");
  }
  return p[iteration - 1];
}

std::size_t AuxiliaryPools::total_faces() const {
  std::size_t n = 0;
  for (const auto& p : pools_) n += p.size() * kFacesPerSet;
  return n;
}

nlohmann::json latent_to_json(const Latent& w) {
  return nlohmann::json(std::vector<double>(w.data(), w.data() + w.size()));
}

Latent latent_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json AuxiliaryPools::to_json() const {
  nlohmann::json categories = nlohmann::json::array();
  for (int c = 0; c < kCategoryCount; ++c) {
    nlohmann::json sets = nlohmann::json::array();
    for (const AuxiliarySet& s : pools_[c]) {
      nlohmann::json latents = nlohmann::json::array();
      for (const FaceImage& f : s.faces) latents.push_back(latent_to_json(f.latent));
      sets.push_back({{"iteration", s.iteration}, {"latents", latents}});
    }
    categories.push_back({{"category", Category::from_index(c).name()}, {"sets", sets}});
  }
  return {{"format_version", 1}, {"categories", categories}};
}

AuxiliaryPools AuxiliaryPools::from_json(const nlohmann::json& j, const Generator& generator) {
  if (j.value("format_version", -1) != 1) throw FormatError("unsupported pool manifest version");
  std::array<std::vector<AuxiliarySet>, kCategoryCount> pools;
  for (const auto& cat : j.at("categories")) {
    const Category c = Category::parse(cat.at("category").get<std::string>());
    for (const auto& sj : cat.at("sets")) {
      AuxiliarySet s;
      s.iteration = sj.at("iteration").get<int>();
      const auto& latents = sj.at("latents");
      if (latents.size() != kFacesPerSet) throw FormatError("auxiliary set must hold six faces");
      for (int k = 0; k < kFacesPerSet; ++k) s.faces[k] = generate(generator, latent_from_json(latents[k]));
      pools[c.index()].push_back(std::move(s));
    }
  }
  return AuxiliaryPools(std::move(pools));
}

AuxiliaryPools build_aux_pools(const Generator& generator, Rng& rng, int sets_per_category) {
  std::array<std::vector<AuxiliarySet>, kCategoryCount> pools;
  for (int c = 0; c < kCategoryCount; ++c) {
    const Category cat = Category::from_index(c);
    for (int i = 1; i <= sets_per_category; ++i) {
      AuxiliarySet s;
      s.iteration = i;
      for (FaceImage& f : s.faces) f = generate(generator, generator.sample_latent(rng, cat));
      pools[c].push_back(std::move(s));
    }
  }
  return AuxiliaryPools(std::move(pools));
}

void save_pools(const AuxiliaryPools& pools, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << pools.to_json().dump() << '\n';
}

AuxiliaryPools load_pools(const std::filesystem::path& path, const Generator& generator) {
  std::ifstream in(path);
  if (!in) throw NotFound("pool manifest not found: " + path.string());
  return AuxiliaryPools::from_json(nlohmann::json::parse(in), generator);
}

}  // namespace mindface::face
