#include "mindface/common/artifacts.hpp"

#include "mindface/common/checkpoint.hpp"
#include "mindface/embedding/triplets.hpp"
#include "mindface/errors.hpp"

#include <fstream>

namespace mindface {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kHeldOutParticipants = 10;

const char* kPools = "pools.json";
const char* kBase = "embedding_base";
const char* kTuned = "embedding_tuned";
const char* kRecon = "reconstructor";

void note(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

recon::SimulationWorld Artifacts::world(const embedding::OracleConfig& rater) const {
  return {&generator, &pools, &tuned_embedder, &tuned_embedder, &tuned_embedder, rater};
}

void save_embedding(const embedding::EmbeddingNet& net, const fs::path& stem) {
  const auto& c = net.config();
  save_checkpoint(stem, net.params(),
                  {{"kind", "embedding"},
                   {"input_dim", c.input_dim},
                   {"hidden_dim", c.hidden_dim},
                   {"embedding_dim", c.embedding_dim},
                   {"init_seed", c.init_seed}});
}

embedding::EmbeddingNet load_embedding(const fs::path& stem) {
  if (!checkpoint_exists(stem)) throw NotFound("missing checkpoint " + stem.string());
  const json echo = read_checkpoint_manifest(stem).at("config");
  embedding::EmbeddingConfig c;
  c.input_dim = echo.at("input_dim").get<int>();
  c.hidden_dim = echo.at("hidden_dim").get<int>();
  c.embedding_dim = echo.at("embedding_dim").get<int>();
  c.init_seed = echo.at("init_seed").get<std::uint64_t>();
  embedding::EmbeddingNet net(c);
  load_checkpoint(stem, net.params());
  return net;
}

void save_reconstructor(const recon::ReconstructionNet& net, double alpha, const fs::path& stem) {
  const auto& c = net.config();
  save_checkpoint(stem, net.params(),
                  {{"kind", "reconstructor"},
                   {"latent_dim", c.latent_dim},
                   {"model_dim", c.model_dim},
                   {"blocks", c.blocks},
                   {"heads", c.heads},
                   {"ff_mult", c.ff_mult},
                   {"max_iters", c.max_iters},
                   {"init_seed", c.init_seed},
                   {"alpha", alpha}});
}

recon::ReconstructionNet load_reconstructor(const fs::path& stem, double* alpha) {
  if (!checkpoint_exists(stem)) throw NotFound("missing checkpoint " + stem.string());
  const json echo = read_checkpoint_manifest(stem).at("config");
  recon::ReconConfig c;
  c.latent_dim = echo.at("latent_dim").get<int>();
  c.model_dim = echo.at("model_dim").get<int>();
  c.blocks = echo.at("blocks").get<int>();
  c.heads = echo.at("heads").get<int>();
  c.ff_mult = echo.at("ff_mult").get<int>();
  c.max_iters = echo.at("max_iters").get<int>();
  c.init_seed = echo.at("init_seed").get<std::uint64_t>();
  recon::ReconstructionNet net(c);
  load_checkpoint(stem, net.params());
  if (alpha) *alpha = echo.at("alpha").get<double>();
  return net;
}

bool has_embedding_stage(const fs::path& dir) {
  return fs::exists(dir / kPools) && checkpoint_exists(dir / kBase) && checkpoint_exists(dir / kTuned);
}

bool has_reconstruction_stage(const fs::path& dir) {
  return has_embedding_stage(dir) && checkpoint_exists(dir / kRecon);
}

EmbeddingStageReport run_embedding_stage(const PipelineConfig& cfg, const fs::path& dir,
                                         const ProgressFn& progress) {
  cfg.validate();
  fs::create_directories(dir);
  const face::Generator gen(cfg.generator);
  Rng pool_rng = make_rng(cfg.pools.seed);
  const auto pools = face::build_aux_pools(gen, pool_rng, cfg.pools.sets_per_category);
  face::save_pools(pools, dir / kPools);
  note(progress, "built auxiliary pools: " + std::to_string(pools.total_faces()) + " faces");

  embedding::EmbeddingNet base(cfg.embedding);
  round_to_f32(base.params());

  Rng trng = make_rng(cfg.triplets.seed);
  const auto triplets = embedding::collect_oracle_triplets(gen, pools, cfg.oracle, cfg.triplets.participants, trng);
  Rng hrng = make_rng(derive_seed(cfg.triplets.seed, 1));
  const auto held_out = embedding::collect_oracle_triplets(gen, pools, cfg.oracle, kHeldOutParticipants, hrng);
  note(progress, "collected " + std::to_string(triplets.size()) + " oracle triplets");

  EmbeddingStageReport rep;
  rep.finetune = embedding::finetune(base, triplets, cfg.finetune);
  round_to_f32(rep.finetune.net.params());
  rep.n_triplets = triplets.size();
  rep.base_satisfaction = embedding::triplet_satisfaction(base, held_out, cfg.finetune.margin);
  rep.tuned_satisfaction = embedding::triplet_satisfaction(rep.finetune.net, held_out, cfg.finetune.margin);
  note(progress, "fine-tuned embedding: loss " + std::to_string(rep.finetune.initial_loss) + " -> " +
                     std::to_string(rep.finetune.final_loss));

  save_embedding(base, dir / kBase);
  save_embedding(rep.finetune.net, dir / kTuned);
  return rep;
}

Artifacts load_embedding_stage(const PipelineConfig& cfg, const fs::path& dir) {
  if (!has_embedding_stage(dir)) throw NotFound("embedding checkpoints missing in " + dir.string());
  Artifacts a{face::Generator(cfg.generator), {}, load_embedding(dir / kBase), load_embedding(dir / kTuned), {}, cfg.session.alpha};
  a.pools = face::load_pools(dir / kPools, a.generator);
  return a;
}

Artifacts load_artifacts(const PipelineConfig& cfg, const fs::path& dir) {
  if (!has_reconstruction_stage(dir)) throw NotFound("trained checkpoints missing in " + dir.string());
  Artifacts a = load_embedding_stage(cfg, dir);
  a.reconstructor = load_reconstructor(dir / kRecon, &a.alpha);
  return a;
}

ReconstructionStageReport run_reconstruction_stage(const PipelineConfig& cfg, const fs::path& dir,
                                                   const ProgressFn& progress) {
  cfg.validate();
  Artifacts a = load_embedding_stage(cfg, dir);
  const auto world = a.world(cfg.oracle);
  ReconstructionStageReport rep;
  note(progress, "training reconstruction net for " + std::to_string(cfg.train.steps) + " steps");
  rep.train = recon::train(cfg.recon, cfg.train, world);
  note(progress, "best validation loss " + std::to_string(rep.train.best_val_loss) + " at step " +
                     std::to_string(rep.train.best_step));

  const auto traces = eval::trace_targets(rep.train.net, world, cfg.alpha.n_targets, face::kMaxIterations,
                                          cfg.alpha.seed);
  rep.alpha = eval::calibrate_alpha(traces, cfg.alpha.grid, cfg.alpha.tolerance, cfg.session.patience);
  note(progress, "calibrated alpha " + std::to_string(rep.alpha.alpha));

  save_reconstructor(rep.train.net, rep.alpha.alpha, dir / kRecon);
  recon::write_train_log(rep.train.log, dir / "train_log.csv");
  write_json(dir / "alpha_calibration.json", {{"alpha", rep.alpha.alpha},
                                              {"grid", rep.alpha.grid},
                                              {"quality_gap", rep.alpha.quality_gap},
                                              {"mean_stop_iteration", rep.alpha.mean_stop_iteration},
                                              {"tolerance", cfg.alpha.tolerance}});
  return rep;
}

}  // namespace mindface
