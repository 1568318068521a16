#include "mindface/common/config.hpp"

#include "mindface/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mindface {
namespace {

using nlohmann::json;

// Reads fields out of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }

  void get_vector(const char* key, Vector& field) {
    std::vector<double> v(field.data(), field.data() + field.size());
    get(key, v);
    if (static_cast<Eigen::Index>(v.size()) != field.size()) {
      throw ConfigError(name_ + "." + key + " must have " + std::to_string(field.size()) + " entries");
    }
    field = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + name_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json adam_json(const nn::AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

void read_adam(const json& j, const std::string& name, nn::AdamConfig& a) {
  Section s(j, name);
  s.get("lr", a.lr);
  s.get("beta1", a.beta1);
  s.get("beta2", a.beta2);
  s.get("eps", a.eps);
  s.finish();
}

json train_json(const recon::TrainConfig& t) {
  return {{"lambda_e", t.lambda_e},
          {"alpha", t.alpha},
          {"max_iters", t.max_iters},
          {"adam", adam_json(t.adam)},
          {"batch", t.batch},
          {"steps", t.steps},
          {"n_targets", t.n_targets},
          {"sigma", t.sigma},
          {"variable_iterations", t.variable_iterations},
          {"seed", t.seed},
          {"eval_every", t.eval_every},
          {"n_val", t.n_val},
          {"n_train_eval", t.n_train_eval}};
}

void read_train(const json& j, const std::string& name, recon::TrainConfig& t) {
  Section s(j, name);
  s.get("lambda_e", t.lambda_e);
  s.get("alpha", t.alpha);
  s.get("max_iters", t.max_iters);
  if (const json* a = s.child("adam")) read_adam(*a, name + ".adam", t.adam);
  s.get("batch", t.batch);
  s.get("steps", t.steps);
  s.get("n_targets", t.n_targets);
  s.get("sigma", t.sigma);
  s.get("variable_iterations", t.variable_iterations);
  s.get("seed", t.seed);
  s.get("eval_every", t.eval_every);
  s.get("n_val", t.n_val);
  s.get("n_train_eval", t.n_train_eval);
  s.finish();
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::vector<double> CalibrationConfig::grid() const {
  if (!(grid_step > 0.0) || grid_max < grid_min || grid_min < 0.0) {
    throw ConfigError("calibration grid is invalid");
  }
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor((grid_max - grid_min) / grid_step + 1e-9));
  // Multiplying instead of accumulating keeps grid values free of drift.
  for (int k = 0; k <= n; ++k) g.push_back(grid_min + k * grid_step);
  return g;
}

eval::AblationConfig PipelineConfig::default_ablation() {
  eval::AblationConfig a;
  a.train.steps = 6000;
  a.train.n_targets = 1000;
  a.train.eval_every = 250;
  return a;
}

void PipelineConfig::validate() const {
  if (generator.latent_dim < generator.identity_dim + generator.nuisance_dim) {
    throw ConfigError("generator.latent_dim must cover identity and nuisance dimensions");
  }
  if (generator.identity_dim != face::kIdentityDim || generator.nuisance_dim != face::kNuisanceDim) {
    throw ConfigError("generator identity/nuisance dimensions are fixed at 14/4");
  }
  if (pools.sets_per_category < face::kMaxIterations) throw ConfigError("pools.sets_per_category must be >= 20");
  if (embedding.input_dim != face::kIdentityDim + face::kNuisanceDim) {
    throw ConfigError("embedding.input_dim must equal the observable dimension (18)");
  }
  if (embedding.hidden_dim < 1 || embedding.embedding_dim < 1) throw ConfigError("embedding sizes must be positive");
  oracle.validate();
  if (finetune.margin < 0.0 || finetune.batch < 1 || finetune.epochs < 0) throw ConfigError("finetune settings invalid");
  if (triplets.participants < 1) throw ConfigError("triplets.participants must be positive");
  if (user.sigma < 0.0) throw ConfigError("user.sigma must be >= 0");
  calibration.grid();
  if (calibration.n_samples < 1) throw ConfigError("calibration.n_samples must be positive");
  if (recon.latent_dim != generator.latent_dim) throw ConfigError("recon.latent_dim must equal generator.latent_dim");
  if (recon.model_dim < 1 || recon.blocks < 1 || recon.heads < 1 || recon.model_dim % recon.heads != 0 ||
      recon.ff_mult < 1) {
    throw ConfigError("recon shape invalid (model_dim must be divisible by heads)");
  }
  train.validate();
  if (alpha.grid.empty() || alpha.tolerance < 0.0 || alpha.n_targets < 1) throw ConfigError("alpha calibration invalid");
  session.validate();
  study.validate();
  lineup.validate();
  ablation.validate();
}

json config_to_json(const PipelineConfig& c) {
  return {
      {"generator",
       {{"latent_dim", c.generator.latent_dim},
        {"identity_dim", c.generator.identity_dim},
        {"nuisance_dim", c.generator.nuisance_dim},
        {"mixing_seed", c.generator.mixing_seed},
        {"squash_gain", c.generator.squash_gain}}},
      {"pools", {{"sets_per_category", c.pools.sets_per_category}, {"seed", c.pools.seed}}},
      {"embedding",
       {{"input_dim", c.embedding.input_dim},
        {"hidden_dim", c.embedding.hidden_dim},
        {"embedding_dim", c.embedding.embedding_dim},
        {"init_seed", c.embedding.init_seed}}},
      {"oracle",
       {{"identity_weights", to_std(c.oracle.identity_weights)},
        {"nuisance_weights", to_std(c.oracle.nuisance_weights)},
        {"sigma_h", c.oracle.sigma_h}}},
      {"finetune",
       {{"margin", c.finetune.margin},
        {"adam", adam_json(c.finetune.adam)},
        {"batch", c.finetune.batch},
        {"epochs", c.finetune.epochs},
        {"seed", c.finetune.seed}}},
      {"triplets", {{"participants", c.triplets.participants}, {"seed", c.triplets.seed}}},
      {"user", {{"sigma", c.user.sigma}, {"seed", c.user.seed}}},
      {"calibration",
       {{"grid_min", c.calibration.grid_min},
        {"grid_max", c.calibration.grid_max},
        {"grid_step", c.calibration.grid_step},
        {"n_samples", c.calibration.n_samples},
        {"seed", c.calibration.seed},
        {"reference_seed", c.calibration.reference_seed}}},
      {"recon",
       {{"latent_dim", c.recon.latent_dim},
        {"model_dim", c.recon.model_dim},
        {"blocks", c.recon.blocks},
        {"heads", c.recon.heads},
        {"ff_mult", c.recon.ff_mult},
        {"max_iters", c.recon.max_iters},
        {"init_seed", c.recon.init_seed}}},
      {"train", train_json(c.train)},
      {"alpha",
       {{"grid", c.alpha.grid},
        {"tolerance", c.alpha.tolerance},
        {"n_targets", c.alpha.n_targets},
        {"seed", c.alpha.seed}}},
      {"session",
       {{"alpha", c.session.alpha}, {"patience", c.session.patience}, {"max_iters", c.session.max_iters}}},
      {"study",
       {{"n_targets", c.study.n_targets},
        {"seed", c.study.seed},
        {"alpha", c.study.alpha},
        {"patience", c.study.patience},
        {"max_iters", c.study.max_iters}}},
      {"lineup",
       {{"n_sessions", c.lineup.n_sessions},
        {"pool_size", c.lineup.pool_size},
        {"raters_per_session", c.lineup.raters_per_session},
        {"seed", c.lineup.seed},
        {"target_absent", c.lineup.target_absent}}},
      {"ablation", {{"train", train_json(c.ablation.train)}, {"num_sigma", c.ablation.num_sigma}}},
  };
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "config");
  if (const json* g = root.child("generator")) {
    Section s(*g, "generator");
    s.get("latent_dim", c.generator.latent_dim);
    s.get("identity_dim", c.generator.identity_dim);
    s.get("nuisance_dim", c.generator.nuisance_dim);
    s.get("mixing_seed", c.generator.mixing_seed);
    s.get("squash_gain", c.generator.squash_gain);
    s.finish();
  }
  if (const json* p = root.child("pools")) {
    Section s(*p, "pools");
    s.get("sets_per_category", c.pools.sets_per_category);
    s.get("seed", c.pools.seed);
    s.finish();
  }
  if (const json* e = root.child("embedding")) {
    Section s(*e, "embedding");
    s.get("input_dim", c.embedding.input_dim);
    s.get("hidden_dim", c.embedding.hidden_dim);
    s.get("embedding_dim", c.embedding.embedding_dim);
    s.get("init_seed", c.embedding.init_seed);
    s.finish();
  }
  if (const json* o = root.child("oracle")) {
    Section s(*o, "oracle");
    s.get_vector("identity_weights", c.oracle.identity_weights);
    s.get_vector("nuisance_weights", c.oracle.nuisance_weights);
    s.get("sigma_h", c.oracle.sigma_h);
    s.finish();
  }
  if (const json* f = root.child("finetune")) {
    Section s(*f, "finetune");
    s.get("margin", c.finetune.margin);
    if (const json* a = s.child("adam")) read_adam(*a, "finetune.adam", c.finetune.adam);
    s.get("batch", c.finetune.batch);
    s.get("epochs", c.finetune.epochs);
    s.get("seed", c.finetune.seed);
    s.finish();
  }
  if (const json* t = root.child("triplets")) {
    Section s(*t, "triplets");
    s.get("participants", c.triplets.participants);
    s.get("seed", c.triplets.seed);
    s.finish();
  }
  if (const json* u = root.child("user")) {
    Section s(*u, "user");
    s.get("sigma", c.user.sigma);
    s.get("seed", c.user.seed);
    s.finish();
  }
  if (const json* k = root.child("calibration")) {
    Section s(*k, "calibration");
    s.get("grid_min", c.calibration.grid_min);
    s.get("grid_max", c.calibration.grid_max);
    s.get("grid_step", c.calibration.grid_step);
    s.get("n_samples", c.calibration.n_samples);
    s.get("seed", c.calibration.seed);
    s.get("reference_seed", c.calibration.reference_seed);
    s.finish();
  }
  if (const json* r = root.child("recon")) {
    Section s(*r, "recon");
    s.get("latent_dim", c.recon.latent_dim);
    s.get("model_dim", c.recon.model_dim);
    s.get("blocks", c.recon.blocks);
    s.get("heads", c.recon.heads);
    s.get("ff_mult", c.recon.ff_mult);
    s.get("max_iters", c.recon.max_iters);
    s.get("init_seed", c.recon.init_seed);
    s.finish();
  }
  if (const json* t = root.child("train")) read_train(*t, "train", c.train);
  if (const json* a = root.child("alpha")) {
    Section s(*a, "alpha");
    s.get("grid", c.alpha.grid);
    s.get("tolerance", c.alpha.tolerance);
    s.get("n_targets", c.alpha.n_targets);
    s.get("seed", c.alpha.seed);
    s.finish();
  }
  if (const json* x = root.child("session")) {
    Section s(*x, "session");
    s.get("alpha", c.session.alpha);
    s.get("patience", c.session.patience);
    s.get("max_iters", c.session.max_iters);
    s.finish();
  }
  if (const json* x = root.child("study")) {
    Section s(*x, "study");
    s.get("n_targets", c.study.n_targets);
    s.get("seed", c.study.seed);
    s.get("alpha", c.study.alpha);
    s.get("patience", c.study.patience);
    s.get("max_iters", c.study.max_iters);
    s.finish();
  }
  if (const json* x = root.child("lineup")) {
    Section s(*x, "lineup");
    s.get("n_sessions", c.lineup.n_sessions);
    s.get("pool_size", c.lineup.pool_size);
    s.get("raters_per_session", c.lineup.raters_per_session);
    s.get("seed", c.lineup.seed);
    s.get("target_absent", c.lineup.target_absent);
    s.finish();
  }
  if (const json* x = root.child("ablation")) {
    Section s(*x, "ablation");
    if (const json* t = s.child("train")) read_train(*t, "ablation.train", c.ablation.train);
    s.get("num_sigma", c.ablation.num_sigma);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace mindface
