#include "mindface/service/server.hpp"

#include "mindface/errors.hpp"
#include "mindface/face/render.hpp"

#include <httplib.h>

#include <random>
#include <regex>

namespace mindface::service {
namespace {

using nlohmann::json;

json feature_values(const face::FaceParams& p) {
  json out = json::object();
  for (int k = 0; k < face::kIdentityDim; ++k) out[std::string(face::kFeatureNames[k])] = p.identity(k);
  return out;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
  } catch (const json::parse_error&) {
    throw InvalidArgument("request body is not valid JSON");
  }
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.contains(key)) throw InvalidArgument(std::string("missing field: ") + key);
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("field has the wrong type: ") + key);
  }
}

}  // namespace

ApiResponse api_error(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

json feature_list() {
  json out = json::array();
  for (int k = 0; k < face::kIdentityDim; ++k) {
    const auto f = static_cast<face::Feature>(k);
    if (!face::is_slider_feature(f)) continue;
    out.push_back({{"name", std::string(face::feature_name(f))}, {"min", 0.0}, {"max", 1.0}, {"default", 0.5}});
  }
  return out;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw InvalidArgument("bind address must look like host:port");
  }
  const std::string port = bind.substr(colon + 1);
  if (port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5) {
    throw InvalidArgument("bind port must be a number");
  }
  const int p = std::stoi(port);
  if (p > 65535) throw InvalidArgument("bind port out of range");
  return {bind.substr(0, colon), p};
}

Service::Service(const Artifacts& artifacts, const session::SessionConfig& session_cfg,
                 const embedding::OracleConfig& rater, ServiceConfig cfg, session::Clock clock)
    : artifacts_(&artifacts),
      engine_(artifacts.generator, artifacts.pools, artifacts.reconstructor, rater, session_cfg, std::move(clock)),
      store_(cfg.sessions_dir),
      cfg_(std::move(cfg)),
      seed_rng_(cfg_.seed != 0 ? make_rng(cfg_.seed) : Rng(std::random_device{}())) {}

std::shared_ptr<std::shared_mutex> Service::lock_for(const std::string& id) {
  std::lock_guard<std::mutex> g(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::shared_mutex>();
  return slot;
}

std::uint64_t Service::next_seed() {
  std::lock_guard<std::mutex> g(seed_mutex_);
  return seed_rng_();
}

ApiResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex session_route(R"(^/api/sessions/([^/]+)(/(aux|ranking|slider|finalize))?$)");
  try {
    if (path == "/api/features" && method == "GET") return {200, feature_list()};
    if (path == "/api/sessions" && method == "POST") return create(parse_body(body));
    std::smatch m;
    if (std::regex_match(path, m, session_route)) {
      const std::string id = m[1];
      const std::string action = m[3];
      if (action.empty() && method == "GET") return get_session(id);
      if (action == "aux" && method == "GET") return aux(id);
      if (action == "ranking" && method == "POST") return ranking(id, parse_body(body));
      if (action == "slider" && method == "POST") return slider(id, parse_body(body));
      if (action == "finalize" && method == "POST") return finalize(id);
    }
    return api_error(404, "not_found", "no route for " + method + " " + path);
  } catch (const InvalidArgument& e) {
    return api_error(400, "invalid_input", e.what());
  } catch (const NotFound& e) {
    return api_error(404, "not_found", e.what());
  } catch (const OutOfStage& e) {
    return api_error(409, "out_of_stage", e.what());
  } catch (const std::exception& e) {
    return api_error(500, "internal", e.what());
  }
}

ApiResponse Service::create(const json& body) {
  const auto category = face::Category::parse(field<std::string>(body, "category"));
  const auto mode = body.contains("mode") ? session::parse_mode(field<std::string>(body, "mode"))
                                          : session::Mode::Interactive;
  const bool explicit_seed = body.contains("seed");
  std::uint64_t seed = explicit_seed ? field<std::uint64_t>(body, "seed") : next_seed();
  session::Session s = engine_.create_session(category, mode, seed);
  while (store_.contains(s.id)) {
    if (explicit_seed) throw InvalidArgument("a session with this seed already exists");
    s = engine_.create_session(category, mode, next_seed());
  }
  auto lock = lock_for(s.id);
  std::unique_lock<std::shared_mutex> g(*lock);
  store_.save(s);
  return {201, {{"session_id", s.id}, {"stage", session::stage_name(s.stage)}, {"category", s.category.name()},
                {"mode", session::mode_name(s.mode)}}};
}

ApiResponse Service::get_session(const std::string& id) {
  auto lock = lock_for(id);
  std::shared_lock<std::shared_mutex> g(*lock);
  const session::Session s = store_.load(id);
  json out = {{"session", session::session_to_json(s)}, {"record", nullptr}};
  if (s.stage == session::Stage::Finalised) out["record"] = session::record_to_json(engine_.record(s));
  return {200, out};
}

ApiResponse Service::aux(const std::string& id) {
  auto lock = lock_for(id);
  std::unique_lock<std::shared_mutex> g(*lock);
  session::Session s = store_.load(id);
  const bool was_pending = s.aux_pending;
  const face::AuxiliarySet& set = engine_.next_aux_set(s);
  if (!was_pending) store_.save(s);
  json faces = json::array();
  for (int k = 0; k < face::kFacesPerSet; ++k) faces.push_back({{"index", k}, {"svg", set.faces[k].svg}});
  return {200, {{"iteration", set.iteration}, {"faces", faces}}};
}

ApiResponse Service::ranking(const std::string& id, const json& body) {
  auto lock = lock_for(id);
  std::unique_lock<std::shared_mutex> g(*lock);
  session::Session s = store_.load(id);
  Ranking r;
  if (body.contains("order")) {
    const auto order = field<std::vector<int>>(body, "order");
    if (!Ranking::is_permutation(order)) throw InvalidArgument("order must be a permutation of 0..5");
    r = Ranking(order);
  } else if (s.mode == session::Mode::Simulated && s.stage == session::Stage::Ranking) {
    r = engine_.simulated_ranking(s);
  } else {
    throw InvalidArgument("missing field: order");
  }
  const auto result = engine_.submit_ranking(s, r);
  store_.save(s);
  json out = {{"iteration", result.iteration},
              {"stopped", result.stopped},
              {"stage", session::stage_name(s.stage)},
              {"order", r.order()},
              {"reconstruction_svg", face::generate(engine_.generator(), result.w_rec).svg}};
  if (result.stopped) out["sliders"] = feature_list();
  return {200, out};
}

ApiResponse Service::slider(const std::string& id, const json& body) {
  const auto feature = face::feature_from_name(field<std::string>(body, "feature"));
  const double value = field<double>(body, "value");
  auto lock = lock_for(id);
  std::unique_lock<std::shared_mutex> g(*lock);
  session::Session s = store_.load(id);
  const face::FaceImage img = engine_.refine(s, feature, value);
  store_.save(s);
  return {200, {{"reconstruction_svg", img.svg}, {"features", feature_values(img.params)}}};
}

ApiResponse Service::finalize(const std::string& id) {
  auto lock = lock_for(id);
  std::unique_lock<std::shared_mutex> g(*lock);
  session::Session s = store_.load(id);
  const auto record = engine_.finalize(s);
  store_.save(s);
  return {200, session::record_to_json(record)};
}

void Service::install(httplib::Server& server) {
  if (cfg_.static_dir) {
    if (!server.set_mount_point("/", cfg_.static_dir->string())) {
      throw InvalidArgument("static directory does not exist: " + cfg_.static_dir->string());
    }
  }
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Delete(".*", route);
  server.Patch(".*", route);
}

}  // namespace mindface::service
