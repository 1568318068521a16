#pragma once

// Headless simulated studies: per-target reconstruction quality, the
// iteration convergence curve and early-stop statistics.

#include "mindface/recon/trainer.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mindface::eval {

struct StudyConfig {
  int n_targets = 200;
  std::uint64_t seed = 23;
  double alpha = 0.1;
  int patience = 1;
  int max_iters = face::kMaxIterations;

  void validate() const;
};

struct TargetResult {
  int index = 0;
  face::Category category;
  double similarity = 0.0;           // after max_iters iterations
  double stopped_similarity = 0.0;   // at the early-stop iteration
  double baseline_similarity = 0.0;  // rank-weighted baseline, max_iters iterations
  int stop_iteration = 0;

  bool operator==(const TargetResult&) const = default;
};

struct CurvePoint {
  int iteration = 0;
  double mean_similarity = 0.0;
  double baseline_similarity = 0.0;
  // Mean over targets of the mean absolute latent change from the previous
  // iteration; 0 at iteration 1.
  double mean_change = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct StudyReport {
  std::vector<TargetResult> targets;
  double mean_similarity = 0.0;
  double std_similarity = 0.0;
  double mean_baseline = 0.0;
  double std_baseline = 0.0;
  double mean_stopped_similarity = 0.0;
  double mean_stop_iteration = 0.0;
  std::vector<CurvePoint> curve;
  std::vector<int> stop_histogram;  // [i] = sessions stopped at iteration i + 1
  std::optional<double> identification_rate;
  std::optional<double> top3_rate;
  // Training logs keyed by configuration label.
  std::map<std::string, std::vector<recon::TrainLogRow>> ablation_curves;

  bool operator==(const StudyReport&) const = default;
};

// Per-target reconstructions after every prefix of a rater-ranked history.
struct PrefixTrace {
  recon::SimulatedTarget target;
  std::vector<face::Latent> reconstructions;  // one per iteration
  std::vector<double> similarities;
  std::vector<double> baseline_similarities;
};

std::vector<PrefixTrace> trace_targets(const recon::ReconstructionNet& net,
                                       const recon::SimulationWorld& world, int n_targets,
                                       int max_iters, std::uint64_t seed);

// First iteration i >= 2 that completes `patience` consecutive sub-alpha
// changes, else the last iteration.
int stop_iteration(const std::vector<face::Latent>& reconstructions, double alpha, int patience);

// Synthetic raters rank every target's auxiliary sets; reconstructions and
// similarities are recorded for each iteration.
StudyReport run_simulated_study(const recon::ReconstructionNet& net,
                                const recon::SimulationWorld& world, const StudyConfig& cfg);
StudyReport summarise_traces(const std::vector<PrefixTrace>& traces, const StudyConfig& cfg);

struct AlphaCalibration {
  double alpha = 0.0;
  std::vector<double> grid;
  std::vector<double> quality_gap;  // 20-iteration minus stopped similarity
  std::vector<double> mean_stop_iteration;
};

// Largest grid alpha whose early-stopped quality stays within `tolerance`
// of the full-length quality. Falls back to the smallest grid value.
AlphaCalibration calibrate_alpha(const std::vector<PrefixTrace>& traces, std::span<const double> grid,
                                 double tolerance, int patience = 1);

}  // namespace mindface::eval
