#pragma once

// Latent space and the deterministic generator: latent -> semantic face
// parameters via a seeded orthonormal mixing matrix and a sigmoid squash.

#include "mindface/rng.hpp"
#include "mindface/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mindface::face {

using Latent = Vector;

inline constexpr int kIdentityDim = 14;
inline constexpr int kNuisanceDim = 4;

enum class Feature : int {
  FaceWidth = 0,
  FaceHeight,
  EyeSize,
  EyeSpacing,
  EyeHeight,
  EyebrowAngle,
  EyebrowThickness,
  NoseWidth,
  NoseLength,
  MouthWidth,
  LipThickness,
  ChinLength,
  SexCode,
  AgeCode,
};

inline constexpr std::array<std::string_view, kIdentityDim> kFeatureNames = {
    "face_width",    "face_height",        "eye_size",   "eye_spacing", "eye_height",
    "eyebrow_angle", "eyebrow_thickness",  "nose_width", "nose_length", "mouth_width",
    "lip_thickness", "chin_length",        "sex_code",   "age_code"};

inline constexpr std::array<std::string_view, kNuisanceDim> kNuisanceNames = {
    "background_hue", "head_tilt", "lighting", "framing_offset"};

// Identity features exposed as refinement sliders (all but sex/age codes).
inline constexpr int kSliderCount = 12;

std::string_view feature_name(Feature f);
// Throws InvalidArgument for an unknown name.
Feature feature_from_name(std::string_view name);
bool is_slider_feature(Feature f);

struct FaceParams {
  Vector identity = Vector::Constant(kIdentityDim, 0.5);
  Vector nuisance = Vector::Constant(kNuisanceDim, 0.5);

  double operator[](Feature f) const { return identity(static_cast<int>(f)); }
  // [identity; nuisance], the vector the embedding network sees.
  Vector observable() const;

  bool operator==(const FaceParams&) const = default;
};

struct Category {
  int sex_bit = 0;  // 1 = male
  int age_bit = 0;  // 1 = 40 and over

  int index() const { return sex_bit * 2 + age_bit; }
  static Category from_index(int idx);
  std::string name() const;
  // Accepts the names produced by name(); throws InvalidArgument otherwise.
  static Category parse(std::string_view name);

  bool operator==(const Category&) const = default;
};

inline constexpr int kCategoryCount = 4;

Category category_of_params(const FaceParams& params);

struct GeneratorConfig {
  int latent_dim = 32;
  int identity_dim = kIdentityDim;
  int nuisance_dim = kNuisanceDim;
  std::uint64_t mixing_seed = 42;
  double squash_gain = 1.5;
};

class Generator {
 public:
  static constexpr int kRejectionBudget = 10000;

  explicit Generator(GeneratorConfig cfg = {});

  const GeneratorConfig& config() const { return cfg_; }
  int latent_dim() const { return cfg_.latent_dim; }
  int observable_dim() const { return cfg_.identity_dim + cfg_.nuisance_dim; }
  // Full orthonormal D x D matrix; only the first P+Q rows are used.
  const Matrix& mixing() const { return mixing_; }

  Latent sample_latent(Rng& rng, std::optional<Category> category = std::nullopt) const;
  FaceParams decode_params(const Latent& latent) const;
  Category category_of(const Latent& latent) const;

  // Unit direction that moves only `feature` under decode_params.
  Vector feature_direction(Feature feature) const;
  Vector feature_direction(std::string_view name) const;
  // Moves `latent` along the feature direction so the decoded feature equals
  // `target` (which must lie strictly inside (0,1)).
  Latent apply_slider(const Latent& latent, Feature feature, double target) const;

  // Backpropagates dL/d(observable) to dL/d(latent).
  Vector decode_backward(const Latent& latent, const Vector& d_observable) const;

 private:
  void check_dim(const Latent& latent) const;

  GeneratorConfig cfg_;
  Matrix mixing_;
};

double sigmoid(double x);
double logit(double p);

}  // namespace mindface::face
