#include "mindface/eval/study.hpp"

#include "mindface/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mindface::eval {
namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void StudyConfig::validate() const {
  if (n_targets < 1) throw ConfigError("study.n_targets must be positive");
  if (!(alpha > 0.0)) throw ConfigError("study.alpha must be positive");
  if (patience < 1) throw ConfigError("study.patience must be at least 1");
  if (max_iters < 1 || max_iters > face::kMaxIterations) throw ConfigError("study.max_iters must lie in [1, 20]");
}

std::vector<PrefixTrace> trace_targets(const recon::ReconstructionNet& net,
                                       const recon::SimulationWorld& world, int n_targets,
                                       int max_iters, std::uint64_t seed) {
  if (n_targets < 1) throw InvalidArgument("study needs at least one target");
  auto targets = recon::simulate_rater_targets(world, n_targets, max_iters, seed);
  std::vector<PrefixTrace> traces(targets.size());
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < n_targets; ++t) {
    PrefixTrace& tr = traces[t];
    tr.target = std::move(targets[t]);
    const auto history = recon::history_of(*world.pools, tr.target, max_iters);
    tr.reconstructions = net.reconstruct_prefixes(history);
    const embedding::Embedding et = world.eval_embedder->embed(world.generator->decode_params(tr.target.latent));
    auto sim = [&](const face::Latent& w) {
      return embedding::cosine(world.eval_embedder->embed(world.generator->decode_params(w)), et);
    };
    for (int i = 1; i <= max_iters; ++i) {
      tr.similarities.push_back(sim(tr.reconstructions[i - 1]));
      tr.baseline_similarities.push_back(
          sim(recon::baseline_rank_weighted(std::span(history).first(static_cast<std::size_t>(i)))));
    }
  }
  return traces;
}

int stop_iteration(const std::vector<face::Latent>& reconstructions, double alpha, int patience) {
  if (reconstructions.empty()) throw InvalidArgument("no reconstructions");
  int streak = 0;
  for (std::size_t i = 1; i < reconstructions.size(); ++i) {
    streak = recon::should_stop(reconstructions[i - 1], reconstructions[i], alpha) ? streak + 1 : 0;
    if (streak >= patience) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(reconstructions.size());
}

StudyReport summarise_traces(const std::vector<PrefixTrace>& traces, const StudyConfig& cfg) {
  cfg.validate();
  if (traces.empty()) throw InvalidArgument("no traces to summarise");
  const int iters = cfg.max_iters;
  StudyReport r;
  r.curve.resize(iters);
  r.stop_histogram.assign(iters, 0);
  std::vector<double> sims, bases, stopped;
  double stop_sum = 0.0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const PrefixTrace& tr = traces[t];
    if (static_cast<int>(tr.reconstructions.size()) < iters) throw InvalidArgument("trace shorter than max_iters");
    const std::vector<face::Latent> recs(tr.reconstructions.begin(), tr.reconstructions.begin() + iters);
    TargetResult res;
    res.index = static_cast<int>(t);
    res.category = tr.target.category;
    res.similarity = tr.similarities[iters - 1];
    res.baseline_similarity = tr.baseline_similarities[iters - 1];
    res.stop_iteration = stop_iteration(recs, cfg.alpha, cfg.patience);
    res.stopped_similarity = tr.similarities[res.stop_iteration - 1];
    r.targets.push_back(res);
    sims.push_back(res.similarity);
    bases.push_back(res.baseline_similarity);
    stopped.push_back(res.stopped_similarity);
    stop_sum += res.stop_iteration;
    ++r.stop_histogram[res.stop_iteration - 1];
    for (int i = 0; i < iters; ++i) {
      r.curve[i].mean_similarity += tr.similarities[i];
      r.curve[i].baseline_similarity += tr.baseline_similarities[i];
      if (i > 0) r.curve[i].mean_change += recon::mean_abs_change(recs[i - 1], recs[i]);
    }
  }
  const double n = static_cast<double>(traces.size());
  for (int i = 0; i < iters; ++i) {
    r.curve[i].iteration = i + 1;
    r.curve[i].mean_similarity /= n;
    r.curve[i].baseline_similarity /= n;
    r.curve[i].mean_change /= n;
  }
  r.mean_similarity = mean_of(sims);
  r.std_similarity = std_of(sims, r.mean_similarity);
  r.mean_baseline = mean_of(bases);
  r.std_baseline = std_of(bases, r.mean_baseline);
  r.mean_stopped_similarity = mean_of(stopped);
  r.mean_stop_iteration = stop_sum / n;
  return r;
}

StudyReport run_simulated_study(const recon::ReconstructionNet& net,
                                const recon::SimulationWorld& world, const StudyConfig& cfg) {
  cfg.validate();
  return summarise_traces(trace_targets(net, world, cfg.n_targets, cfg.max_iters, cfg.seed), cfg);
}

AlphaCalibration calibrate_alpha(const std::vector<PrefixTrace>& traces, std::span<const double> grid,
                                 double tolerance, int patience) {
  if (grid.empty()) throw InvalidArgument("alpha grid is empty");
  if (traces.empty()) throw InvalidArgument("no traces for alpha calibration");
  AlphaCalibration out;
  out.grid.assign(grid.begin(), grid.end());
  std::sort(out.grid.begin(), out.grid.end());
  out.alpha = out.grid.front();
  for (double a : out.grid) {
    if (!(a > 0.0)) throw InvalidArgument("alpha grid values must be positive");
    double gap = 0.0, stop = 0.0;
    for (const auto& tr : traces) {
      const int s = stop_iteration(tr.reconstructions, a, patience);
      gap += tr.similarities.back() - tr.similarities[s - 1];
      stop += s;
    }
    gap /= static_cast<double>(traces.size());
    out.quality_gap.push_back(gap);
    out.mean_stop_iteration.push_back(stop / static_cast<double>(traces.size()));
    if (gap <= tolerance) out.alpha = a;
  }
  return out;
}

}  // namespace mindface::eval
