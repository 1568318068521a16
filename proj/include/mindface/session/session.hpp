#pragma once

// Interactive reconstruction sessions: ranking iterations with early stop,
// slider refinement, finalisation and an append-only event log.

#include "mindface/embedding/oracle.hpp"
#include "mindface/face/pools.hpp"
#include "mindface/ranking.hpp"
#include "mindface/recon/reconstruction_net.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mindface::session {

enum class Stage { Ranking, Refinement, Finalised };
enum class Mode { Interactive, Simulated };
enum class EventKind {
  AuxIssued,
  RankingAccepted,
  ReconstructionUpdated,
  EarlyStopped,
  SliderApplied,
  Finalised
};

std::string stage_name(Stage s);
Stage parse_stage(std::string_view name);
std::string mode_name(Mode m);
// "interactive" or "simulated"; throws InvalidArgument otherwise.
Mode parse_mode(std::string_view name);
std::string event_kind_name(EventKind k);
EventKind parse_event_kind(std::string_view name);

struct SessionEvent {
  EventKind kind = EventKind::AuxIssued;
  std::int64_t timestamp_ms = 0;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const SessionEvent&) const = default;
};

struct SliderEdit {
  face::Feature feature = face::Feature::FaceWidth;
  double value = 0.5;
  std::int64_t timestamp_ms = 0;

  bool operator==(const SliderEdit&) const = default;
};

struct Session {
  std::string id;
  face::Category category;
  Mode mode = Mode::Interactive;
  Stage stage = Stage::Ranking;
  std::uint64_t seed = 0;
  std::int64_t created_at = 0;
  // Ranking of iteration k (1-based) refers to pools.set(category, k).
  std::vector<Ranking> history;
  std::vector<face::Latent> reconstructions;
  std::vector<SliderEdit> slider_edits;
  // Latest reconstruction with the slider edits applied (Refinement onward).
  std::optional<face::Latent> refined_latent;
  std::optional<face::Latent> final_latent;
  std::vector<SessionEvent> events;
  bool aux_pending = false;  // current iteration's set has been issued
  int below_alpha_streak = 0;
  // Simulated mode only: the face the synthetic rater has in mind.
  std::optional<face::Latent> simulated_target;

  int iteration() const { return static_cast<int>(history.size()); }
  bool operator==(const Session&) const = default;
};

struct SessionConfig {
  double alpha = 0.1;
  // Consecutive sub-alpha changes required before stopping early.
  int patience = 1;
  int max_iters = face::kMaxIterations;

  void validate() const;
};

struct SubmitResult {
  face::Latent w_rec;
  bool stopped = false;
  int iteration = 0;
};

struct ReconstructionRecord {
  std::string session_id;
  face::Category category;
  face::Latent final_latent;
  face::FaceParams params;
  std::string svg;
  std::vector<SessionEvent> events;
};

using Clock = std::function<std::int64_t()>;
// Milliseconds since the Unix epoch.
std::int64_t system_clock_ms();

// Holds the shared immutable model state; every operation mutates only the
// session passed to it. Callers serialise operations per session.
class Engine {
 public:
  Engine(const face::Generator& generator, const face::AuxiliaryPools& pools,
         const recon::ReconstructionNet& net, embedding::OracleConfig rater,
         SessionConfig cfg = {}, Clock clock = system_clock_ms);

  const face::Generator& generator() const { return *generator_; }
  const face::AuxiliaryPools& pools() const { return *pools_; }
  const SessionConfig& config() const { return cfg_; }

  Session create_session(face::Category category, Mode mode, std::uint64_t seed) const;

  // Set for iteration |history| + 1; repeated calls return the same set.
  const face::AuxiliarySet& next_aux_set(Session& s) const;
  SubmitResult submit_ranking(Session& s, const Ranking& ranking) const;
  // Latent shown to the user: newest reconstruction, or the refined latent.
  face::Latent current_latent(const Session& s) const;
  face::FaceImage refine(Session& s, face::Feature feature, double value) const;
  ReconstructionRecord finalize(Session& s) const;
  ReconstructionRecord record(const Session& s) const;

  // Simulated mode: the synthetic rater's ranking of the current set.
  Ranking simulated_ranking(const Session& s) const;
  // Simulated mode: ranks until the session leaves the Ranking stage.
  void run_simulated(Session& s) const;

  // Re-executes the event log of `recorded` on a fresh session with the same
  // identity; reconstructions are recomputed, not copied.
  Session replay(const Session& recorded) const;

 private:
  void log(Session& s, EventKind kind, nlohmann::json payload) const;
  face::Latent reconstruct(const Session& s) const;

  const face::Generator* generator_;
  const face::AuxiliaryPools* pools_;
  const recon::ReconstructionNet* net_;
  embedding::OracleConfig rater_;
  SessionConfig cfg_;
  Clock clock_;
};

inline constexpr const char* kSessionFormatVersion = "1";

nlohmann::json session_to_json(const Session& s);
// Throws FormatError on a version mismatch or malformed document.
Session session_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const ReconstructionRecord& r);

// One JSON document per session: <dir>/<id>.json
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_of(const std::string& id) const;
  void save(const Session& s) const;
  // Throws NotFound for an unknown id.
  Session load(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace mindface::session
