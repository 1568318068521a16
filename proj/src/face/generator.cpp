#include "mindface/face/generator.hpp"

#include "mindface/errors.hpp"

#include <cmath>

namespace mindface::face {

std::string_view feature_name(Feature f) { return kFeatureNames.at(static_cast<int>(f)); }

Feature feature_from_name(std::string_view name) {
  for (int i = 0; i < kIdentityDim; ++i)
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  throw InvalidArgument("unknown feature: " + std::string(name));
}

bool is_slider_feature(Feature f) { return f != Feature::SexCode && f != Feature::AgeCode; }

Vector FaceParams::observable() const {
  Vector v(identity.size() + nuisance.size());
  v << identity, nuisance;
  return v;
}

Category Category::from_index(int idx) {
  if (idx < 0 || idx >= kCategoryCount) throw InvalidArgument("category index out of range");
  return Category{idx / 2, idx % 2};
}

std::string Category::name() const {
  return std::string(sex_bit ? "male" : "female") + (age_bit ? "_over40" : "_under40");
}

Category Category::parse(std::string_view name) {
  for (int i = 0; i < kCategoryCount; ++i) {
    const Category c = from_index(i);
    if (c.name() == name) return c;
  }
  throw InvalidArgument("unknown category: " + std::string(name));
}

Category category_of_params(const FaceParams& params) {
  // strict "> 0.5": the boundary value maps to bit 0
  return Category{params[Feature::SexCode] > 0.5 ? 1 : 0, params[Feature::AgeCode] > 0.5 ? 1 : 0};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

Generator::Generator(GeneratorConfig cfg) : cfg_(cfg) {
  if (cfg_.identity_dim != kIdentityDim || cfg_.nuisance_dim != kNuisanceDim) {
    throw ConfigError("identity/nuisance widths are fixed at 14/4");
  }
  if (cfg_.identity_dim + cfg_.nuisance_dim > cfg_.latent_dim) {
    throw ConfigError("identity + nuisance dims exceed latent dim");
  }
  if (!(cfg_.squash_gain > 0.0)) throw ConfigError("squash gain must be positive");
  Rng rng = make_rng(cfg_.mixing_seed);
  Matrix gauss(cfg_.latent_dim, cfg_.latent_dim);
  for (Eigen::Index i = 0; i < gauss.rows(); ++i)
    for (Eigen::Index j = 0; j < gauss.cols(); ++j) gauss(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  mixing_ = q.transpose();  // rows of an orthogonal matrix are orthonormal
}

void Generator::check_dim(const Latent& latent) const {
  if (latent.size() != cfg_.latent_dim) throw InvalidArgument("latent dimension mismatch");
}

Latent Generator::sample_latent(Rng& rng, std::optional<Category> category) const {
  for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
    Latent w(cfg_.latent_dim);
    for (int i = 0; i < cfg_.latent_dim; ++i) w(i) = standard_normal(rng);
    if (!category || category_of(w) == *category) return w;
  }
  throw SamplingFailure("rejection budget exhausted while sampling a latent");
}

FaceParams Generator::decode_params(const Latent& latent) const {
  check_dim(latent);
  const int used = cfg_.identity_dim + cfg_.nuisance_dim;
  const Vector pre = mixing_.topRows(used) * latent;
  FaceParams out;
  for (int j = 0; j < cfg_.identity_dim; ++j) out.identity(j) = sigmoid(cfg_.squash_gain * pre(j));
  for (int k = 0; k < cfg_.nuisance_dim; ++k)
    out.nuisance(k) = sigmoid(cfg_.squash_gain * pre(cfg_.identity_dim + k));
  return out;
}

Category Generator::category_of(const Latent& latent) const {
  return category_of_params(decode_params(latent));
}

Vector Generator::feature_direction(Feature feature) const {
  return mixing_.row(static_cast<int>(feature)).transpose();
}

Vector Generator::feature_direction(std::string_view name) const {
  return feature_direction(feature_from_name(name));
}

Latent Generator::apply_slider(const Latent& latent, Feature feature, double target) const {
  check_dim(latent);
  if (!(target > 0.0 && target < 1.0)) {
    throw InvalidArgument("slider target must lie strictly inside (0,1)");
  }
  const int j = static_cast<int>(feature);
  const double current_pre = mixing_.row(j).dot(latent);
  const double step = logit(target) / cfg_.squash_gain - current_pre;
  return latent + mixing_.row(j).transpose() * step;
}

Vector Generator::decode_backward(const Latent& latent, const Vector& d_observable) const {
  check_dim(latent);
  const int used = cfg_.identity_dim + cfg_.nuisance_dim;
  if (d_observable.size() != used) throw InvalidArgument("observable gradient size mismatch");
  const Vector pre = mixing_.topRows(used) * latent;
  Vector d_pre(used);
  for (int i = 0; i < used; ++i) {
    const double s = sigmoid(cfg_.squash_gain * pre(i));
    d_pre(i) = d_observable(i) * cfg_.squash_gain * s * (1.0 - s);
  }
  return mixing_.topRows(used).transpose() * d_pre;
}

}  // namespace mindface::face
