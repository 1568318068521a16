#include "mindface/errors.hpp"
#include "mindface/session/session.hpp"

#include <fstream>
#include <sstream>

namespace mindface::session {
namespace {

using nlohmann::json;

json optional_latent(const std::optional<face::Latent>& w) {
  return w ? face::latent_to_json(*w) : json(nullptr);
}

std::optional<face::Latent> optional_latent(const json& j) {
  if (j.is_null()) return std::nullopt;
  return face::latent_from_json(j);
}

json events_to_json(const std::vector<SessionEvent>& events) {
  json out = json::array();
  for (const auto& e : events) {
    out.push_back({{"kind", event_kind_name(e.kind)}, {"timestamp_ms", e.timestamp_ms}, {"payload", e.payload}});
  }
  return out;
}

}  // namespace

json session_to_json(const Session& s) {
  json history = json::array();
  for (const auto& r : s.history) history.push_back(r.order());
  json recons = json::array();
  for (const auto& w : s.reconstructions) recons.push_back(face::latent_to_json(w));
  json edits = json::array();
  for (const auto& e : s.slider_edits) {
    edits.push_back({{"feature", std::string(face::feature_name(e.feature))},
                     {"value", e.value},
                     {"timestamp_ms", e.timestamp_ms}});
  }
  return {{"format_version", kSessionFormatVersion},
          {"id", s.id},
          {"category", s.category.name()},
          {"mode", mode_name(s.mode)},
          {"stage", stage_name(s.stage)},
          {"seed", s.seed},
          {"created_at", s.created_at},
          {"history", history},
          {"reconstructions", recons},
          {"slider_edits", edits},
          {"refined_latent", optional_latent(s.refined_latent)},
          {"final_latent", optional_latent(s.final_latent)},
          {"events", events_to_json(s.events)},
          {"aux_pending", s.aux_pending},
          {"below_alpha_streak", s.below_alpha_streak},
          {"simulated_target", optional_latent(s.simulated_target)}};
}

Session session_from_json(const json& j) {
  try {
    const auto version = j.at("format_version").get<std::string>();
    if (version != kSessionFormatVersion) {
      throw FormatError("unsupported session format version " + version);
    }
    Session s;
    s.id = j.at("id").get<std::string>();
    s.category = face::Category::parse(j.at("category").get<std::string>());
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.stage = parse_stage(j.at("stage").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.created_at = j.at("created_at").get<std::int64_t>();
    for (const auto& order : j.at("history")) s.history.emplace_back(order.get<std::vector<int>>());
    for (const auto& w : j.at("reconstructions")) s.reconstructions.push_back(face::latent_from_json(w));
    for (const auto& e : j.at("slider_edits")) {
      s.slider_edits.push_back({face::feature_from_name(e.at("feature").get<std::string>()),
                                e.at("value").get<double>(), e.at("timestamp_ms").get<std::int64_t>()});
    }
    s.refined_latent = optional_latent(j.at("refined_latent"));
    s.final_latent = optional_latent(j.at("final_latent"));
    for (const auto& e : j.at("events")) {
      s.events.push_back({parse_event_kind(e.at("kind").get<std::string>()),
                          e.at("timestamp_ms").get<std::int64_t>(), e.at("payload")});
    }
    s.aux_pending = j.at("aux_pending").get<bool>();
    s.below_alpha_streak = j.at("below_alpha_streak").get<int>();
    s.simulated_target = optional_latent(j.at("simulated_target"));
    if (s.reconstructions.size() != s.history.size()) {
      throw FormatError("session history and reconstructions differ in length");
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed session document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed session document: ") + e.what());
  }
}

json record_to_json(const ReconstructionRecord& r) {
  json params = json::object();
  for (int k = 0; k < face::kIdentityDim; ++k) {
    params[std::string(face::kFeatureNames[k])] = r.params.identity(k);
  }
  for (int k = 0; k < face::kNuisanceDim; ++k) {
    params[std::string(face::kNuisanceNames[k])] = r.params.nuisance(k);
  }
  return {{"session_id", r.session_id},
          {"category", r.category.name()},
          {"final_latent", face::latent_to_json(r.final_latent)},
          {"params", params},
          {"svg", r.svg},
          {"events", events_to_json(r.events)}};
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::path_of(const std::string& id) const {
  // Ids are hex tokens; anything else cannot name a stored session.
  if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw NotFound("unknown session id: " + id);
  }
  return dir_ / (id + ".json");
}

void SessionStore::save(const Session& s) const {
  const auto path = path_of(s.id);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << session_to_json(s).dump(2) << '\n';
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool SessionStore::contains(const std::string& id) const {
  try {
    return std::filesystem::exists(path_of(id));
  } catch (const NotFound&) {
    return false;
  }
}

Session SessionStore::load(const std::string& id) const {
  const auto path = path_of(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("unknown session id: " + id);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("cannot parse " + path.string() + ": " + e.what());
  }
  return session_from_json(j);
}

}  // namespace mindface::session
