// mindface command-line tool: training, simulated studies, calibration and
// the HTTP service.

#include "mindface/common/artifacts.hpp"
#include "mindface/common/config.hpp"
#include "mindface/common/csv.hpp"
#include "mindface/errors.hpp"
#include "mindface/eval/ablation.hpp"
#include "mindface/eval/lineup.hpp"
#include "mindface/eval/report.hpp"
#include "mindface/service/server.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mindface;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

PipelineConfig load(const Common& c) { return c.config.empty() ? PipelineConfig{} : load_config(c.config); }

void progress(const std::string& msg) { std::cerr << "[mindface] " << msg << '\n'; }

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int train_embedding(const Common& c) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.triplets.seed = *c.seed;
  const fs::path out = c.out.empty() ? "checkpoints" : c.out;
  const auto rep = run_embedding_stage(cfg, out, progress);
  write_json(out / "config.json", config_to_json(cfg));
  std::cout << "triplets " << rep.n_triplets << "\n"
            << "triplet_loss " << rep.finetune.initial_loss << " -> " << rep.finetune.final_loss << "\n"
            << "held_out_satisfaction base " << rep.base_satisfaction << " tuned " << rep.tuned_satisfaction << "\n";
  return 0;
}

int train_reconstructor(const Common& c) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.train.seed = *c.seed;
  const fs::path out = c.out.empty() ? "checkpoints" : c.out;
  const auto rep = run_reconstruction_stage(cfg, out, progress);
  std::cout << "best_step " << rep.train.best_step << "\n"
            << "best_val_loss " << rep.train.best_val_loss << "\n"
            << "alpha " << rep.alpha.alpha << "\n";
  return 0;
}

int simulate(const Common& c, const std::string& checkpoints) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.study.seed = *c.seed;
  const Artifacts a = load_artifacts(cfg, checkpoints);
  cfg.study.alpha = a.alpha;
  const auto report = eval::run_simulated_study(a.reconstructor, a.world(cfg.oracle), cfg.study);
  const fs::path out = c.out.empty() ? "report" : c.out;
  eval::export_report(report, out);
  std::cout << "mean_similarity " << report.mean_similarity << "\n"
            << "mean_baseline " << report.mean_baseline << "\n"
            << "mean_stop_iteration " << report.mean_stop_iteration << "\n";
  return 0;
}

int ablate(const Common& c, const std::string& checkpoints) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.ablation.train.seed = *c.seed;
  const Artifacts a = load_embedding_stage(cfg, checkpoints);
  const eval::AblationWorld world{&a.generator, &a.pools, &a.base_embedder, &a.tuned_embedder, cfg.oracle};
  const auto results = eval::ablation_suite(cfg.recon, cfg.ablation, world);
  const fs::path out = c.out.empty() ? "ablation" : c.out;
  eval::export_report(eval::ablation_report(results), out);
  for (const auto& r : results) {
    std::cout << r.label << " peak " << r.peak_val_similarity << " at " << r.peak_step << " final "
              << r.final_val_similarity << "\n";
  }
  return 0;
}

int lineup(const Common& c, const std::string& checkpoints, bool untrained) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.lineup.seed = *c.seed;
  Artifacts a = load_artifacts(cfg, checkpoints);
  if (untrained) a.reconstructor = recon::ReconstructionNet(cfg.recon);
  session::SessionConfig scfg = cfg.session;
  scfg.alpha = a.alpha;
  const session::Engine engine(a.generator, a.pools, a.reconstructor, cfg.oracle, scfg);
  const auto res = eval::run_lineup_study(engine, a.tuned_embedder, cfg.oracle, cfg.lineup);
  eval::StudyReport report;
  report.identification_rate = res.identification_rate;
  report.top3_rate = res.top3_rate;
  report.mean_stop_iteration = res.mean_stop_iteration;
  const fs::path out = c.out.empty() ? "lineup" : c.out;
  eval::export_report(report, out);
  std::cout << "votes " << res.votes << "\n"
            << "identification_rate " << res.identification_rate << "\n"
            << "top3_rate " << res.top3_rate << "\n";
  return 0;
}

int calibrate(const Common& c, const std::string& checkpoints, const std::string& reference) {
  PipelineConfig cfg = load(c);
  if (c.seed) cfg.calibration.seed = *c.seed;
  const Artifacts a = load_embedding_stage(cfg, checkpoints);
  std::vector<double> ref;
  if (!reference.empty()) {
    ref = read_csv_column(reference, "tau");
  } else {
    const auto pairs = user::rater_ranking_pairs(a.generator, a.pools, cfg.oracle, cfg.calibration.n_samples,
                                                 cfg.calibration.reference_seed);
    ref = user::mean_pairwise_tau(pairs).samples;
  }
  const user::RankingWorld world{&a.generator, &a.pools, &a.tuned_embedder};
  const auto grid = cfg.calibration.grid();
  const auto res = user::calibrate_sigma(world, ref, grid, cfg.calibration.n_samples, cfg.calibration.seed);
  const fs::path out = c.out.empty() ? "calibration" : c.out;
  fs::create_directories(out);
  user::export_tau_samples(ref, out / "reference_tau.csv");
  write_json(out / "calibration.json",
             {{"sigma", res.sigma}, {"grid", res.grid}, {"distances", res.distances}, {"mean_tau", res.mean_tau}});
  std::cout << "sigma " << res.sigma << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

int serve(const Common& c, const std::string& bind, const std::string& checkpoints, const std::string& sessions,
          const std::string& static_dir) {
  PipelineConfig cfg = load(c);
  const auto [host, port] = service::parse_bind(bind);
  const Artifacts a = load_artifacts(cfg, checkpoints);
  session::SessionConfig scfg = cfg.session;
  scfg.alpha = a.alpha;
  service::ServiceConfig svc_cfg;
  svc_cfg.sessions_dir = sessions;
  if (!static_dir.empty()) svc_cfg.static_dir = static_dir;
  if (c.seed) svc_cfg.seed = *c.seed;
  service::Service svc(a, scfg, cfg.oracle, svc_cfg);
  httplib::Server server;
  svc.install(server);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  progress("listening on " + host + ":" + std::to_string(port));
  if (!server.listen(host, port)) throw Error("cannot bind " + bind);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mindface: reconstruct a remembered face from iterative rankings"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file");
    sub->add_option("--seed", common.seed, "seed override for this command's random process");
    sub->add_option("--out", common.out, "output directory");
  };
  std::string checkpoints = "checkpoints";
  auto add_checkpoints = [&checkpoints](CLI::App* sub) {
    sub->add_option("--checkpoints", checkpoints, "trained model directory");
  };

  auto* te = app.add_subcommand("train-embedding", "build auxiliary pools and fine-tune the embedding net");
  add_common(te);
  auto* tr = app.add_subcommand("train-reconstructor", "train the reconstruction net and calibrate alpha");
  add_common(tr);
  auto* sim = app.add_subcommand("simulate", "simulated reconstruction study");
  add_common(sim);
  add_checkpoints(sim);
  auto* abl = app.add_subcommand("ablate", "train the four ablation variants");
  add_common(abl);
  add_checkpoints(abl);
  bool untrained = false;
  auto* lin = app.add_subcommand("lineup", "lineup identification study");
  add_common(lin);
  add_checkpoints(lin);
  lin->add_flag("--untrained", untrained, "use a freshly initialised reconstruction net (chance control)");
  std::string reference;
  auto* cal = app.add_subcommand("calibrate-sigma", "fit user-model noise to reference rank agreement");
  add_common(cal);
  add_checkpoints(cal);
  cal->add_option("--reference", reference, "CSV with a 'tau' column; default: synthetic rater pairs");
  std::string bind = "127.0.0.1:8080";
  std::string sessions = "sessions";
  std::string static_dir;
  auto* srv = app.add_subcommand("serve", "HTTP service");
  add_common(srv);
  add_checkpoints(srv);
  srv->add_option("--bind", bind, "address:port to listen on");
  srv->add_option("--sessions", sessions, "session store directory");
  srv->add_option("--static", static_dir, "built UI bundle served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (te->parsed()) return train_embedding(common);
    if (tr->parsed()) return train_reconstructor(common);
    if (sim->parsed()) return simulate(common, checkpoints);
    if (abl->parsed()) return ablate(common, checkpoints);
    if (lin->parsed()) return lineup(common, checkpoints, untrained);
    if (cal->parsed()) return calibrate(common, checkpoints, reference);
    if (srv->parsed()) return serve(common, bind, checkpoints, sessions, static_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
