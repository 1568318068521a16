#include "mindface/session/session.hpp"

#include "mindface/errors.hpp"
#include "mindface/face/render.hpp"
#include "mindface/recon/loss.hpp"

#include <array>
#include <chrono>
#include <cstdio>

namespace mindface::session {
namespace {

constexpr std::array<const char*, 3> kStageNames = {"Ranking", "Refinement", "Finalised"};
constexpr std::array<const char*, 2> kModeNames = {"interactive", "simulated"};
constexpr std::array<const char*, 6> kEventNames = {"AuxIssued",    "RankingAccepted",
                                                    "ReconstructionUpdated", "EarlyStopped",
                                                    "SliderApplied", "Finalised"};

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::array<const char*, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (name == names[i]) return static_cast<E>(i);
  }
  throw InvalidArgument(std::string("unknown ") + what + ": " + std::string(name));
}

constexpr std::uint64_t kIdStream = 0x1d;
constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kRaterStream = 1000;

std::string make_id(std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(derive_seed(seed, kIdStream)));
  return buf;
}

void require_stage(const Session& s, Stage expected, const char* op) {
  if (s.stage != expected) {
    throw OutOfStage(std::string(op) + " requires stage " + stage_name(expected) + ", session is in " +
                     stage_name(s.stage));
  }
}

}  // namespace

std::string stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }
Stage parse_stage(std::string_view name) { return parse_enum<Stage>(name, kStageNames, "stage"); }
std::string mode_name(Mode m) { return kModeNames[static_cast<int>(m)]; }
Mode parse_mode(std::string_view name) { return parse_enum<Mode>(name, kModeNames, "mode"); }
std::string event_kind_name(EventKind k) { return kEventNames[static_cast<int>(k)]; }
EventKind parse_event_kind(std::string_view name) {
  return parse_enum<EventKind>(name, kEventNames, "event kind");
}

void SessionConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("session.alpha must be positive");
  if (patience < 1) throw ConfigError("session.patience must be at least 1");
  if (max_iters < 1 || max_iters > face::kMaxIterations) {
    throw ConfigError("session.max_iters must lie in [1, 20]");
  }
}

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Engine::Engine(const face::Generator& generator, const face::AuxiliaryPools& pools,
               const recon::ReconstructionNet& net, embedding::OracleConfig rater,
               SessionConfig cfg, Clock clock)
    : generator_(&generator),
      pools_(&pools),
      net_(&net),
      rater_(std::move(rater)),
      cfg_(cfg),
      clock_(std::move(clock)) {
  cfg_.validate();
  rater_.validate();
  if (static_cast<int>(pools.pool(face::Category{}).size()) < cfg_.max_iters) {
    throw InvalidArgument("auxiliary pools hold fewer sets than max_iters");
  }
}

void Engine::log(Session& s, EventKind kind, nlohmann::json payload) const {
  s.events.push_back(SessionEvent{kind, clock_(), std::move(payload)});
}

Session Engine::create_session(face::Category category, Mode mode, std::uint64_t seed) const {
  Session s;
  s.id = make_id(seed);
  s.category = category;
  s.mode = mode;
  s.seed = seed;
  s.created_at = clock_();
  if (mode == Mode::Simulated) {
    Rng rng = make_rng(derive_seed(seed, kTargetStream));
    s.simulated_target = generator_->sample_latent(rng, category);
  }
  return s;
}

const face::AuxiliarySet& Engine::next_aux_set(Session& s) const {
  require_stage(s, Stage::Ranking, "next_aux_set");
  const int iteration = s.iteration() + 1;
  if (!s.aux_pending) {
    s.aux_pending = true;
    log(s, EventKind::AuxIssued, {{"iteration", iteration}});
  }
  return pools_->set(s.category, iteration);
}

face::Latent Engine::reconstruct(const Session& s) const {
  std::vector<recon::RankedIteration> history;
  history.reserve(s.history.size());
  for (int k = 0; k < s.iteration(); ++k) {
    history.push_back({&pools_->set(s.category, k + 1), s.history[k]});
  }
  return net_->reconstruct(history);
}

SubmitResult Engine::submit_ranking(Session& s, const Ranking& ranking) const {
  require_stage(s, Stage::Ranking, "submit_ranking");
  if (!Ranking::is_permutation(ranking.order())) throw InvalidArgument("ranking is not a permutation");
  if (!s.aux_pending) next_aux_set(s);

  s.history.push_back(ranking);
  s.aux_pending = false;
  const int iteration = s.iteration();
  log(s, EventKind::RankingAccepted,
      {{"iteration", iteration}, {"order", std::vector<int>(ranking.order().begin(), ranking.order().end())}});

  face::Latent w = reconstruct(s);
  nlohmann::json update = {{"iteration", iteration}};
  bool converged = false;
  if (!s.reconstructions.empty()) {
    const double change = recon::mean_abs_change(s.reconstructions.back(), w);
    update["mean_abs_change"] = change;
    s.below_alpha_streak = change < cfg_.alpha ? s.below_alpha_streak + 1 : 0;
    converged = s.below_alpha_streak >= cfg_.patience;
  }
  s.reconstructions.push_back(w);
  log(s, EventKind::ReconstructionUpdated, std::move(update));

  const bool capped = iteration >= cfg_.max_iters;
  const bool stopped = converged || capped;
  if (stopped) {
    s.stage = Stage::Refinement;
    s.refined_latent = w;
    log(s, EventKind::EarlyStopped,
        {{"iteration", iteration}, {"reason", converged ? "converged" : "max_iterations"}});
  }
  return {w, stopped, iteration};
}

face::Latent Engine::current_latent(const Session& s) const {
  if (s.final_latent) return *s.final_latent;
  if (s.refined_latent) return *s.refined_latent;
  if (!s.reconstructions.empty()) return s.reconstructions.back();
  throw OutOfStage("session has no reconstruction yet");
}

face::FaceImage Engine::refine(Session& s, face::Feature feature, double value) const {
  require_stage(s, Stage::Refinement, "refine");
  if (!face::is_slider_feature(feature)) {
    throw InvalidArgument("feature is not adjustable: " + std::string(face::feature_name(feature)));
  }
  if (!(value > 0.0 && value < 1.0)) throw InvalidArgument("slider value must lie in (0, 1)");

  face::Latent w = current_latent(s);
  // Setting a feature to the value it already has is a no-op.
  if (generator_->decode_params(w)[feature] != value) w = generator_->apply_slider(w, feature, value);
  s.refined_latent = w;
  const std::int64_t now = clock_();
  s.slider_edits.push_back({feature, value, now});
  s.events.push_back({EventKind::SliderApplied, now,
                      {{"feature", std::string(face::feature_name(feature))}, {"value", value}}});
  return face::generate(*generator_, w);
}

ReconstructionRecord Engine::record(const Session& s) const {
  ReconstructionRecord r;
  r.session_id = s.id;
  r.category = s.category;
  r.final_latent = current_latent(s);
  const face::FaceImage img = face::generate(*generator_, r.final_latent);
  r.params = img.params;
  r.svg = img.svg;
  r.events = s.events;
  return r;
}

ReconstructionRecord Engine::finalize(Session& s) const {
  require_stage(s, Stage::Refinement, "finalize");
  s.final_latent = current_latent(s);
  s.stage = Stage::Finalised;
  log(s, EventKind::Finalised, {{"iteration", s.iteration()}, {"edits", s.slider_edits.size()}});
  return record(s);
}

Ranking Engine::simulated_ranking(const Session& s) const {
  if (s.mode != Mode::Simulated || !s.simulated_target) {
    throw InvalidArgument("session has no simulated rater");
  }
  require_stage(s, Stage::Ranking, "simulated_ranking");
  const int iteration = s.iteration() + 1;
  const face::AuxiliarySet& set = pools_->set(s.category, iteration);
  std::array<face::FaceParams, face::kFacesPerSet> faces;
  for (int k = 0; k < face::kFacesPerSet; ++k) faces[k] = set.faces[k].params;
  Rng rng = make_rng(derive_seed(s.seed, kRaterStream + iteration));
  return embedding::oracle_ranking(generator_->decode_params(*s.simulated_target), faces, rater_, rng);
}

void Engine::run_simulated(Session& s) const {
  while (s.stage == Stage::Ranking) {
    next_aux_set(s);
    submit_ranking(s, simulated_ranking(s));
  }
}

Session Engine::replay(const Session& recorded) const {
  // Feed the recorded timestamps back so the replay is a faithful copy.
  std::vector<std::int64_t> stamps{recorded.created_at};
  for (const auto& e : recorded.events) stamps.push_back(e.timestamp_ms);
  std::size_t next = 0;
  Clock recorded_clock = [&stamps, &next]() -> std::int64_t {
    if (next >= stamps.size()) throw FormatError("replay diverged from the recorded event log");
    return stamps[next++];
  };
  Engine fresh(*generator_, *pools_, *net_, rater_, cfg_, recorded_clock);

  Session s = fresh.create_session(recorded.category, recorded.mode, recorded.seed);
  for (const auto& e : recorded.events) {
    switch (e.kind) {
      case EventKind::AuxIssued:
        fresh.next_aux_set(s);
        break;
      case EventKind::RankingAccepted: {
        const auto order = e.payload.at("order").get<std::vector<int>>();
        fresh.submit_ranking(s, Ranking(order));
        break;
      }
      case EventKind::SliderApplied:
        fresh.refine(s, face::feature_from_name(e.payload.at("feature").get<std::string>()),
                     e.payload.at("value").get<double>());
        break;
      case EventKind::Finalised:
        fresh.finalize(s);
        break;
      case EventKind::ReconstructionUpdated:
      case EventKind::EarlyStopped:
        break;  // emitted by submit_ranking itself
    }
  }
  if (s.events.size() != recorded.events.size()) {
    throw FormatError("replay produced a different number of events");
  }
  return s;
}

}  // namespace mindface::session
