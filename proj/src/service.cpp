#include "raceline/service.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <httplib.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

constexpr double kBoundaryTol = 1e-4;

struct StageError {
  std::string stage;
  std::exception_ptr error;
};

Response error_response(int status, std::string_view stage, std::string_view msg) {
  return {status, Json{{"error", std::string(msg)}, {"stage", std::string(stage)}}};
}

int status_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const FitError*>(&e) ||
      dynamic_cast<const InfeasibleError*>(&e)) {
    return 422;
  }
  if (dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const UnsupportedError*>(&e)) {
    return 400;
  }
  return 500;
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (...) {
    throw StageError{stage, std::current_exception()};
  }
}

Response from_stage_error(const StageError& se) {
  try {
    std::rethrow_exception(se.error);
  } catch (const Json::exception& e) {
    return error_response(400, se.stage, fmt::format("malformed JSON: {}", e.what()));
  } catch (const std::exception& e) {
    return error_response(status_for(e), se.stage, e.what());
  }
}

Json parse_body(std::string_view body) {
  if (body.empty()) {
    return Json::object();
  }
  auto j = Json::parse(body);
  if (!j.is_object()) {
    throw ArgumentError("request body must be a JSON object");
  }
  return j;
}

std::string config_value(const Json& v) {
  if (v.is_string()) {
    return v.get<std::string>();
  }
  if (v.is_boolean()) {
    return v.get<bool>() ? "true" : "false";
  }
  if (v.is_number()) {
    return v.dump();
  }
  throw ArgumentError("config values must be strings, numbers or booleans");
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    const auto end = std::min(path.find('/', pos), path.size());
    out.push_back(path.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

Json points_json(std::span<const Point2> pts) {
  Json out = Json::array();
  for (const auto& p : pts) {
    out.push_back(Json::array({p.x(), p.y()}));
  }
  return out;
}

Json control_points_json(const SplineTrajectory& s) {
  Json out = Json::array();
  for (int i = 0; i < s.num_ctrl(); ++i) {
    out.push_back(Json::array({s.cx()[i], s.cy()[i]}));
  }
  return out;
}

double safe_curvature(const SplineTrajectory& s, double t) {
  try {
    return curvature(s, t);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void refresh_sample(Session& s, std::size_t j) {
  const auto& disc = s.centerline.disc;
  s.positions[j] = evaluate(s.working, disc.params[j]);
  s.curvatures[j] = safe_curvature(s.working, disc.params[j]);
  s.offsets[j] = disc.normal(j).dot(s.positions[j] - disc.positions[j]);
}

void refresh_violations(Session& s) {
  s.violations.clear();
  for (std::size_t j = 0; j < s.offsets.size(); ++j) {
    if (s.offsets[j] > s.centerline.left[j] + kBoundaryTol ||
        s.offsets[j] < -s.centerline.right[j] - kBoundaryTol) {
      s.violations.push_back(j);
    }
  }
}

void refresh_all(Session& s) {
  const std::size_t m = s.centerline.disc.size();
  s.positions.resize(m);
  s.curvatures.resize(m);
  s.offsets.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    refresh_sample(s, j);
  }
  refresh_violations(s);
}

Json sample_json(const Session& s, std::size_t j) {
  const bool bad = std::binary_search(s.violations.begin(), s.violations.end(), j);
  return Json{{"index", j},
              {"x", s.positions[j].x()},
              {"y", s.positions[j].y()},
              {"curvature", s.curvatures[j]},
              {"offset", s.offsets[j]},
              {"violation", bad}};
}

Json config_json(const RunConfig& c) {
  return Json{{"ds", c.ds},
              {"margin_m", c.margin_m},
              {"iterations", c.iterations},
              {"kkt_tol", c.kkt_tol},
              {"regularization", c.regularization},
              {"slide_limit_m", c.slide_limit_m},
              {"window", c.window},
              {"closed_loop", c.closed_loop}};
}

void check_revision(const Session& s, const Json& body) {
  if (!body.contains("revision")) {
    return;
  }
  const auto rev = staged("request", [&] { return body.at("revision").get<std::uint64_t>(); });
  if (rev != s.revision) {
    throw StageError{"revision", std::make_exception_ptr(std::runtime_error(
                                     fmt::format("stale revision {}, session is at {}",
                                                 body.at("revision").dump(), s.revision)))};
  }
}

std::vector<int> window_from(const Json& body, int num_ctrl) {
  if (!body.contains("window") || body.at("window").is_null()) {
    std::vector<int> all(static_cast<std::size_t>(num_ctrl));
    for (int i = 0; i < num_ctrl; ++i) {
      all[i] = i;
    }
    return all;
  }
  const auto& w = body.at("window");
  if (w.is_string()) {
    return parse_window_ranges(w.get<std::string>(), num_ctrl);
  }
  std::string spec;
  for (const auto& r : w) {
    if (!spec.empty()) {
      spec += ',';
    }
    spec += r.is_array() ? fmt::format("{}:{}", r.at(0).get<int>(), r.at(1).get<int>())
                         : std::to_string(r.get<int>());
  }
  return parse_window_ranges(spec, num_ctrl);
}

}  // namespace

Session::Session(std::string id_, RunConfig cfg, TrackDefinition def, CenterlineModel cm)
    : id(std::move(id_)),
      config(std::move(cfg)),
      track(std::move(def)),
      centerline(std::move(cm)),
      working(centerline.spline) {
  refresh_all(*this);
  baseline = simulate_discretization(centerline.disc, config.vehicle).metrics;
}

Service::Service(std::uint64_t seed) : rng_(seed) {}

std::size_t Service::session_count() const {
  std::lock_guard lock(registry_mutex_);
  return sessions_.size();
}

std::shared_ptr<Session> Service::find(const std::string& id) const {
  std::lock_guard lock(registry_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  const auto parts = split_path(path);
  if (parts.size() < 3 || parts[0] != "api" || parts[1] != "v1" || parts[2] != "sessions") {
    return error_response(404, "route", fmt::format("no route for {} {}", method, path));
  }
  try {
    if (parts.size() == 3) {
      if (method != "POST") {
        return error_response(405, "route", "sessions collection accepts POST only");
      }
      return create_session(body);
    }
    auto session = find(std::string(parts[3]));
    if (!session) {
      return error_response(404, "session", fmt::format("unknown session '{}'", parts[3]));
    }
    std::lock_guard lock(session->mutex);
    const auto json = [&] { return staged("request", [&] { return parse_body(body); }); };
    if (parts.size() == 4 && method == "GET") {
      return get_state(*session);
    }
    if (parts.size() == 6 && parts[4] == "control-points" && method == "PATCH") {
      return move_control_point(*session, parts[5], json());
    }
    if (parts.size() == 5 && parts[4] == "optimize" && method == "POST") {
      return run_optimize(*session, json());
    }
    if (parts.size() == 5 && parts[4] == "simulate" && method == "POST") {
      return run_simulate(*session, json());
    }
    if (parts.size() == 5 && parts[4] == "metrics" && method == "GET") {
      return get_metrics(*session);
    }
    if (parts.size() == 5 && parts[4] == "export" && method == "GET") {
      return export_bundle(*session);
    }
    return error_response(404, "route", fmt::format("no route for {} {}", method, path));
  } catch (const StageError& se) {
    if (se.stage == "revision") {
      try {
        std::rethrow_exception(se.error);
      } catch (const std::exception& e) {
        return error_response(409, se.stage, e.what());
      }
    }
    return from_stage_error(se);
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response Service::create_session(std::string_view body) {
  std::string csv;
  std::string name = "track";
  RunConfig cfg = parse_config("");
  staged("request", [&] {
    Json j;
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && body[first] == '{') {
      j = parse_body(body);
    } else {
      csv = std::string(body);
      return;
    }
    if (!j.contains("track_csv") || !j.at("track_csv").is_string()) {
      throw ArgumentError("body needs a 'track_csv' string");
    }
    csv = j.at("track_csv").get<std::string>();
    if (j.contains("name")) {
      name = j.at("name").get<std::string>();
    }
    if (j.contains("config")) {
      for (const auto& [key, value] : j.at("config").items()) {
        if (key == "track" || key == "out") {
          throw ArgumentError(fmt::format("config key '{}' does not apply to sessions", key));
        }
        cfg.set(key, config_value(value));
      }
    }
    cfg.validate();
  });
  auto def = staged("load", [&] { return parse_track_csv(csv, name, cfg.closed_loop); });
  auto cm = staged("fit", [&] { return build_centerline(def, cfg.centerline_options(def)); });

  std::string id;
  {
    std::lock_guard lock(registry_mutex_);
    do {
      id = fmt::format("{:016x}", rng_());
    } while (sessions_.count(id) != 0);
  }
  auto session = staged("simulate", [&] {
    return std::make_shared<Session>(id, std::move(cfg), std::move(def), std::move(cm));
  });
  std::lock_guard slock(session->mutex);
  {
    std::lock_guard lock(registry_mutex_);
    sessions_.emplace(id, session);
  }
  auto r = get_state(*session);
  r.status = 201;
  return r;
}

Response Service::get_state(Session& s) const {
  const auto& cm = s.centerline;
  const auto bounds = boundary_polylines(cm);
  Json violations = s.violations;
  return {200,
          Json{{"id", s.id},
               {"revision", s.revision},
               {"track", s.track.name},
               {"ctrl_points", s.working.num_ctrl()},
               {"samples", cm.disc.size()},
               {"config", config_json(s.config)},
               {"vehicle", vehicle_to_json(s.config.vehicle)},
               {"centerline",
                {{"spline", spline_to_json(cm.spline)},
                 {"positions", points_json(cm.disc.positions)},
                 {"curvature", cm.disc.curvatures},
                 {"left", cm.left},
                 {"right", cm.right}}},
               {"boundaries",
                {{"left", points_json(bounds.left)}, {"right", points_json(bounds.right)}}},
               {"working",
                {{"spline", spline_to_json(s.working)},
                 {"control_points", control_points_json(s.working)},
                 {"positions", points_json(s.positions)},
                 {"curvature", s.curvatures},
                 {"offset", s.offsets}}},
               {"violations", violations},
               {"baseline_metrics", metrics_to_json(s.baseline)},
               {"metrics", s.metrics ? metrics_to_json(*s.metrics) : Json(nullptr)},
               {"metrics_revision", s.metrics_revision},
               {"metrics_stale", !s.metrics || s.metrics_revision != s.revision},
               {"warnings", cm.warnings}}};
}

Response Service::move_control_point(Session& s, std::string_view index, const Json& body) {
  int i = 0;
  staged("request", [&] {
    const auto res = std::from_chars(index.data(), index.data() + index.size(), i);
    if (res.ec != std::errc() || res.ptr != index.data() + index.size() || i < 0 ||
        i >= s.working.num_ctrl()) {
      throw RangeError(fmt::format("control point index '{}' outside [0, {})", index,
                                   s.working.num_ctrl()));
    }
    if (!body.contains("x") || !body.contains("y")) {
      throw ArgumentError("body needs numeric 'x' and 'y'");
    }
  });
  check_revision(s, body);
  const Point2 p = staged("request", [&] {
    return Point2(body.at("x").get<double>(), body.at("y").get<double>());
  });
  if (!p.allFinite()) {
    return error_response(400, "request", "control point must be finite");
  }
  s.working = s.working.with_control_point(i, p);
  ++s.revision;

  const auto& params = s.centerline.disc.params;
  std::vector<std::size_t> changed;
  for (const auto& [a, b] : s.working.support(i)) {
    const auto lo = std::lower_bound(params.begin(), params.end(), a);
    const auto hi = std::upper_bound(params.begin(), params.end(), b);
    for (auto it = lo; it != hi; ++it) {
      changed.push_back(static_cast<std::size_t>(it - params.begin()));
    }
  }
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  for (std::size_t j : changed) {
    refresh_sample(s, j);
  }
  refresh_violations(s);

  Json delta = Json::array();
  for (std::size_t j : changed) {
    delta.push_back(sample_json(s, j));
  }
  Json violations = s.violations;
  return {200, Json{{"revision", s.revision},
                    {"index", i},
                    {"control_point", Json::array({p.x(), p.y()})},
                    {"changed", delta},
                    {"violations", violations},
                    {"metrics_stale", true}}};
}

Response Service::run_optimize(Session& s, const Json& body) {
  check_revision(s, body);
  OptimizerConfig cfg;
  std::vector<int> free;
  staged("request", [&] {
    cfg = s.config.optimizer_config(s.working.num_ctrl());
    if (body.contains("iterations")) {
      cfg.iterations = body.at("iterations").get<int>();
    }
    free = window_from(body, s.working.num_ctrl());
  });
  auto result =
      staged("optimize", [&] { return optimize_window(s.centerline, s.working, free, cfg); });
  const auto before = s.positions;
  s.working = result.spline;
  ++s.revision;
  refresh_all(s);

  Json delta = Json::array();
  for (std::size_t j = 0; j < before.size(); ++j) {
    if (before[j] != s.positions[j]) {
      delta.push_back(sample_json(s, j));
    }
  }
  const auto& sol = result.solution;
  Json violations = s.violations;
  Json response{{"revision", s.revision},
                {"status", std::string(to_string(sol.status))},
                {"objective", sol.objective},
                {"kkt_stationarity", sol.kkt_stationarity},
                {"kkt_primal", sol.kkt_primal},
                {"kkt_complementarity", sol.kkt_complementarity},
                {"num_vars", result.num_vars},
                {"num_rows", result.num_rows},
                {"qp_iterations", sol.iterations},
                {"solve_time_s", sol.solve_time},
                {"free_indices", free},
                {"control_points", control_points_json(s.working)},
                {"changed", delta},
                {"violations", violations},
                {"metrics_stale", true}};
  s.last_optimize = std::move(result);
  return {200, response};
}

Response Service::run_simulate(Session& s, const Json& body) {
  check_revision(s, body);
  const bool force =
      staged("request", [&] { return body.contains("force") && body.at("force").get<bool>(); });
  if (!s.violations.empty() && !force) {
    Json violations = s.violations;
    return {409, Json{{"error", fmt::format("working raceline leaves the track at {} samples; "
                                            "pass force=true to simulate anyway",
                                            s.violations.size())},
                      {"stage", "simulate"},
                      {"violations", violations}}};
  }
  const auto sim = staged("simulate", [&] {
    return simulate_spline(s.working, s.config.ds, s.config.vehicle);
  });
  s.metrics = sim.metrics;
  s.metrics_revision = s.revision;
  Json x = Json::array();
  Json y = Json::array();
  for (const auto& p : sim.disc.positions) {
    x.push_back(p.x());
    y.push_back(p.y());
  }
  Json response{{"revision", s.revision},
                {"metrics", metrics_to_json(sim.metrics)},
                {"baseline_metrics", metrics_to_json(s.baseline)},
                {"profile", {{"x", x}, {"y", y}, {"v", sim.profile.v}}}};
  if (!s.violations.empty()) {
    response["warning"] = fmt::format("simulated with {} boundary violations", s.violations.size());
  }
  return {200, response};
}

Response Service::get_metrics(const Session& s) const {
  const bool stale = !s.metrics || s.metrics_revision != s.revision;
  return {200, Json{{"revision", s.revision},
                    {"baseline", metrics_to_json(s.baseline)},
                    {"working", s.metrics ? metrics_to_json(*s.metrics) : Json(nullptr)},
                    {"metrics_revision", s.metrics_revision},
                    {"stale", stale},
                    {"comparison", s.metrics ? comparison_table(s.baseline, *s.metrics) : ""}}};
}

Response Service::export_bundle(const Session& s) const {
  const auto same = [](std::span<const double> a, std::span<const double> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  };
  const OptimizeResult* opt = nullptr;
  if (s.last_optimize && same(s.working.cx(), s.last_optimize->spline.cx()) &&
      same(s.working.cy(), s.last_optimize->spline.cy())) {
    opt = &*s.last_optimize;
  }
  const auto b = staged("simulate", [&] {
    return make_bundle(s.config, s.track, s.centerline, s.working, opt);
  });
  auto j = bundle_to_json(b);
  j["revision"] = s.revision;
  return {200, j};
}

void bind_http(httplib::Server& server, Service& service) {
  const auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  const std::string pattern = R"(/api/v1/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Patch(pattern, handler);
  server.Options(pattern, [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace raceline
