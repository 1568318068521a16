#pragma once

// JSON-over-HTTP front end for sessions. Every non-2xx body is
// {"code": ..., "message": ...} with code one of invalid_input, not_found,
// out_of_stage, internal.

#include "mindface/common/artifacts.hpp"
#include "mindface/session/session.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace mindface::service {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceConfig {
  std::filesystem::path sessions_dir = "sessions";
  std::optional<std::filesystem::path> static_dir;  // built UI bundle, served at /
  std::uint64_t seed = 0;                           // 0: seed session ids from the OS
};

class Service {
 public:
  Service(const Artifacts& artifacts, const session::SessionConfig& session_cfg,
          const embedding::OracleConfig& rater, ServiceConfig cfg, session::Clock clock = session::system_clock_ms);

  // Transport-independent dispatch; `path` excludes the query string.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

  // Routes every request through handle() and mounts the static bundle.
  void install(httplib::Server& server);

  const session::Engine& engine() const { return engine_; }
  const session::SessionStore& store() const { return store_; }

 private:
  std::shared_ptr<std::shared_mutex> lock_for(const std::string& id);
  std::uint64_t next_seed();

  ApiResponse create(const nlohmann::json& body);
  ApiResponse get_session(const std::string& id);
  ApiResponse aux(const std::string& id);
  ApiResponse ranking(const std::string& id, const nlohmann::json& body);
  ApiResponse slider(const std::string& id, const nlohmann::json& body);
  ApiResponse finalize(const std::string& id);

  const Artifacts* artifacts_;
  session::Engine engine_;
  session::SessionStore store_;
  ServiceConfig cfg_;

  std::mutex locks_mutex_;
  std::unordered_map<std::string, std::shared_ptr<std::shared_mutex>> locks_;
  std::mutex seed_mutex_;
  Rng seed_rng_;
};

// Slider metadata: {name, min, max, default} for each adjustable feature.
nlohmann::json feature_list();

ApiResponse api_error(int status, const std::string& code, const std::string& message);

// Parses "addr:port"; throws InvalidArgument on malformed input.
std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace mindface::service
