#include "raceline/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    out.push_back(trim(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

double to_double(std::string_view text, std::string_view what) {
  const std::string s(trim(text));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ArgumentError(fmt::format("{}: '{}' is not a finite number", what, s));
  }
  return v;
}

int to_int(std::string_view text, std::string_view what) {
  const auto s = trim(text);
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ArgumentError(fmt::format("{}: '{}' is not an integer", what, s));
  }
  return v;
}

bool to_bool(std::string_view text, std::string_view what) {
  const auto s = trim(text);
  if (s == "true") {
    return true;
  }
  if (s == "false") {
    return false;
  }
  throw ArgumentError(fmt::format("{}: '{}' is not true or false", what, s));
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

std::vector<double> doubles_from(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ValidationError(fmt::format("spline JSON: missing array '{}'", key));
  }
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) {
      throw ValidationError(fmt::format("spline JSON: '{}' holds a non-number", key));
    }
    out.push_back(v.get<double>());
  }
  return out;
}

double polyline_length(const TrackDefinition& def) {
  double len = 0.0;
  const std::size_t n = def.waypoints.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    len += (def.waypoints[i + 1] - def.waypoints[i]).norm();
  }
  if (def.closed && n > 1) {
    len += (def.waypoints.front() - def.waypoints.back()).norm();
  }
  return len;
}

Json profile_summary(const DiscretizationSet& disc) {
  return Json{{"samples", disc.size()},
              {"length_m", disc.total_length},
              {"spacing_m", disc.spacing},
              {"closed", disc.closed}};
}

}  // namespace

Json spline_to_json(const SplineTrajectory& s) {
  const auto k = s.knots().values();
  return Json{{"degree", s.degree()},
              {"periodic", s.periodic()},
              {"knots", std::vector<double>(k.begin(), k.end())},
              {"cx", std::vector<double>(s.cx().begin(), s.cx().end())},
              {"cy", std::vector<double>(s.cy().begin(), s.cy().end())}};
}

SplineTrajectory spline_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("degree") || !j.at("degree").is_number_integer() ||
      !j.contains("periodic") || !j.at("periodic").is_boolean()) {
    throw ValidationError("spline JSON: expected {degree, periodic, knots, cx, cy}");
  }
  const int degree = j.at("degree").get<int>();
  auto cx = doubles_from(j, "cx");
  auto cy = doubles_from(j, "cy");
  try {
    return SplineTrajectory(KnotVector(doubles_from(j, "knots"), degree), std::move(cx),
                            std::move(cy), j.at("periodic").get<bool>());
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(fmt::format("spline JSON: {}", e.what()));
  }
}

std::string format_trace_csv(const DiscretizationSet& disc, const VelocityProfile& prof) {
  std::string out(kTraceCsvHeader);
  out += '\n';
  for (std::size_t i = 0; i < disc.size(); ++i) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", g17(disc.params[i]),
                       g17(disc.positions[i].x()), g17(disc.positions[i].y()),
                       g17(disc.headings[i]), g17(disc.curvatures[i]), g17(prof.v[i]),
                       g17(prof.a_lon[i]), g17(prof.a_lat[i]), g17(prof.t_cum[i]));
  }
  return out;
}

DiscretizationSet parse_trace_csv(std::string_view text, bool closed) {
  DiscretizationSet disc;
  disc.closed = closed;
  bool header = false;
  std::size_t row = 0;
  for (const auto line : lines_of(text)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (!header) {
      if (line != kTraceCsvHeader) {
        throw ValidationError(fmt::format("trace CSV: expected header '{}'", kTraceCsvHeader));
      }
      header = true;
      continue;
    }
    ++row;
    std::vector<double> f;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const auto field = line.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
      try {
        f.push_back(to_double(field, "value"));
      } catch (const ArgumentError& e) {
        throw ValidationError(fmt::format("trace CSV row {}: {}", row, e.what()));
      }
      if (comma == std::string_view::npos) {
        break;
      }
      pos = comma + 1;
    }
    if (f.size() != 9) {
      throw ValidationError(fmt::format("trace CSV row {}: expected 9 columns, got {}", row,
                                        f.size()));
    }
    disc.params.push_back(f[0]);
    disc.positions.emplace_back(f[1], f[2]);
    disc.headings.push_back(f[3]);
    disc.curvatures.push_back(f[4]);
  }
  if (!header) {
    throw ValidationError(fmt::format("trace CSV: missing header '{}'", kTraceCsvHeader));
  }
  const std::size_t m = disc.size();
  if (m < 3) {
    throw ValidationError(fmt::format("trace CSV: need at least 3 samples, got {}", m));
  }
  const auto seg = [&](std::size_t i, std::size_t j) {
    const double chord = (disc.positions[j] - disc.positions[i]).norm();
    const double k = 0.5 * std::abs(disc.curvatures[i] + disc.curvatures[j]);
    const double x = 0.5 * chord * k;
    if (x < 1e-8) {
      return chord;
    }
    return 2.0 * std::asin(std::min(1.0, x)) / k;
  };
  disc.arc.assign(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double len = seg(i - 1, i);
    if (!(len > 0.0)) {
      throw ValidationError(fmt::format("trace CSV row {}: repeats the previous position", i + 1));
    }
    disc.arc[i] = disc.arc[i - 1] + len;
  }
  disc.total_length = closed ? disc.arc.back() + seg(m - 1, 0) : disc.arc.back();
  disc.spacing = disc.total_length / static_cast<double>(disc.num_segments());
  return disc;
}

std::string format_heatmap_csv(const DiscretizationSet& disc, const VelocityProfile& prof) {
  std::string out = "x_m,y_m,v_mps\n";
  for (std::size_t i = 0; i < disc.size(); ++i) {
    out += fmt::format("{},{},{}\n", g17(disc.positions[i].x()), g17(disc.positions[i].y()),
                       g17(prof.v[i]));
  }
  return out;
}

std::string format_boundaries_csv(const CenterlineModel& cm) {
  const auto b = boundary_polylines(cm);
  std::string out = "x_left_m,y_left_m,x_right_m,y_right_m\n";
  for (std::size_t i = 0; i < b.left.size(); ++i) {
    out += fmt::format("{},{},{},{}\n", g17(b.left[i].x()), g17(b.left[i].y()),
                       g17(b.right[i].x()), g17(b.right[i].y()));
  }
  return out;
}

Json metrics_to_json(const LapMetrics& m) {
  return Json{{"lap_time_s", m.lap_time},          {"avg_speed_mps", m.avg_speed},
              {"max_speed_mps", m.max_speed},      {"min_speed_mps", m.min_speed},
              {"max_lat_g_mps2", m.max_lat_g},     {"max_throttle_mps2", m.max_throttle},
              {"max_braking_mps2", m.max_braking}};
}

LapMetrics metrics_from_json(const Json& j) {
  LapMetrics m;
  m.lap_time = j.at("lap_time_s").get<double>();
  m.avg_speed = j.at("avg_speed_mps").get<double>();
  m.max_speed = j.at("max_speed_mps").get<double>();
  m.min_speed = j.at("min_speed_mps").get<double>();
  m.max_lat_g = j.at("max_lat_g_mps2").get<double>();
  m.max_throttle = j.at("max_throttle_mps2").get<double>();
  m.max_braking = j.at("max_braking_mps2").get<double>();
  return m;
}

Json vehicle_to_json(const TractionEllipse& te) {
  Json j{{"a_acc_max", te.a_acc_max},
         {"a_dec_max", te.a_dec_max},
         {"a_lat_left", te.a_lat_left},
         {"a_lat_right", te.a_lat_right}};
  j["v_max"] = te.v_max ? Json(*te.v_max) : Json(nullptr);
  return j;
}

std::string comparison_table(const LapMetrics& c, const LapMetrics& o) {
  struct Row {
    const char* name;
    double center;
    double opt;
  };
  const Row rows[] = {
      {"Lap Time (s)", c.lap_time, o.lap_time},
      {"Ave Speed (m/s)", c.avg_speed, o.avg_speed},
      {"Max Speed (m/s)", c.max_speed, o.max_speed},
      {"Min Speed (m/s)", c.min_speed, o.min_speed},
      {"Max Lat G (m/s^2)", c.max_lat_g, o.max_lat_g},
      {"Max Throttling (m/s^2)", c.max_throttle, o.max_throttle},
      {"Max Braking (m/s^2)", c.max_braking, o.max_braking},
  };
  std::string out = fmt::format("{:<24}{:>13}{:>13}{:>11}\n", "", "Center Line", "Optimized",
                                "Delta (%)");
  for (const auto& r : rows) {
    std::string delta = "n/a";
    if (r.center != 0.0) {
      const double pct = (r.opt - r.center) / std::abs(r.center) * 100.0;
      delta = fmt::format("{:.2f}", std::abs(pct) < 0.005 ? 0.0 : pct);
    } else if (r.opt == 0.0) {
      delta = "0.00";
    }
    out += fmt::format("{:<24}{:>13.2f}{:>13.2f}{:>11}\n", r.name, r.center + 0.0, r.opt + 0.0,
                       delta);
  }
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string what = fmt::format("config key '{}'", key);
  auto set_vehicle = [&](double& field) {
    field = to_double(value, what);
    std::erase(vehicle_defaults, std::string(key));
  };
  if (key == "track") {
    track = std::string(value);
  } else if (key == "ds") {
    ds = to_double(value, what);
  } else if (key == "ctrl_points") {
    ctrl_points = to_int(value, what);
  } else if (key == "margin_m") {
    margin_m = to_double(value, what);
  } else if (key == "fit_tolerance") {
    fit_tolerance = to_double(value, what);
  } else if (key == "out") {
    out = std::string(value);
  } else if (key == "iterations") {
    iterations = to_int(value, what);
  } else if (key == "kkt_tol") {
    kkt_tol = to_double(value, what);
  } else if (key == "regularization") {
    regularization = to_double(value, what);
  } else if (key == "slide_limit_m") {
    slide_limit_m =
        value == "none" ? std::numeric_limits<double>::infinity() : to_double(value, what);
  } else if (key == "window") {
    window = std::string(value);
  } else if (key == "closed_loop") {
    closed_loop = to_bool(value, what);
  } else if (key == "a_acc_max") {
    set_vehicle(vehicle.a_acc_max);
  } else if (key == "a_dec_max") {
    // Braking may be given signed.
    set_vehicle(vehicle.a_dec_max);
    vehicle.a_dec_max = std::abs(vehicle.a_dec_max);
  } else if (key == "a_lat_left") {
    set_vehicle(vehicle.a_lat_left);
  } else if (key == "a_lat_right") {
    set_vehicle(vehicle.a_lat_right);
  } else if (key == "v_max") {
    double v = 0.0;
    set_vehicle(v);
    vehicle.v_max = v;
  } else {
    throw ArgumentError(fmt::format("unknown config key '{}'", key));
  }
}

void RunConfig::validate() const {
  if (!(ds > 0.0)) {
    throw ArgumentError(fmt::format("ds must be positive, got {}", ds));
  }
  if (ctrl_points != 0 && ctrl_points < 8) {
    throw ArgumentError(fmt::format("ctrl_points must be at least 8, got {}", ctrl_points));
  }
  if (!(margin_m >= 0.0)) {
    throw ArgumentError(fmt::format("margin_m must be nonnegative, got {}", margin_m));
  }
  if (iterations < 1 || iterations > 5) {
    throw ArgumentError(fmt::format("iterations must lie in [1, 5], got {}", iterations));
  }
  if (!(kkt_tol > 0.0) || !(regularization >= 0.0)) {
    throw ArgumentError("kkt_tol must be positive and regularization nonnegative");
  }
  if (!(slide_limit_m >= 0.0)) {
    throw ArgumentError(fmt::format("slide_limit_m must be nonnegative, got {}", slide_limit_m));
  }
  vehicle.validate();
  if (!track.empty() && !std::filesystem::exists(track)) {
    throw ArgumentError(fmt::format("track file '{}' does not exist", track.string()));
  }
}

CenterlineOptions RunConfig::centerline_options(const TrackDefinition& def) const {
  CenterlineOptions o;
  o.spacing = ds;
  o.margin = margin_m;
  o.fit_tolerance = fit_tolerance;
  o.num_ctrl = ctrl_points;
  if (o.num_ctrl == 0) {
    o.num_ctrl = std::max(8, static_cast<int>(std::lround(polyline_length(def) / 50.0)));
    o.num_ctrl = std::min<int>(o.num_ctrl, static_cast<int>(def.waypoints.size()));
  }
  return o;
}

OptimizerConfig RunConfig::optimizer_config(int num_ctrl) const {
  OptimizerConfig c;
  c.iterations = iterations;
  c.kkt_tol = kkt_tol;
  c.regularization = regularization;
  c.slide_limit = slide_limit_m;
  if (!window.empty()) {
    c.window = parse_window_ranges(window, num_ctrl);
  }
  return c;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.vehicle_defaults = {"a_acc_max", "a_dec_max", "a_lat_left", "a_lat_right", "v_max"};
  std::size_t lineno = 0;
  for (auto line : lines_of(text)) {
    ++lineno;
    std::string value;
    bool quoted = false;
    const auto eq = line.find('=');
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (eq == std::string_view::npos) {
      throw ArgumentError(fmt::format("config line {}: expected key = value", lineno));
    }
    const auto key = trim(line.substr(0, eq));
    auto rest = trim(line.substr(eq + 1));
    if (!rest.empty() && rest.front() == '"') {
      const auto close = rest.find('"', 1);
      if (close == std::string_view::npos) {
        throw ArgumentError(fmt::format("config line {}: unterminated string", lineno));
      }
      value = std::string(rest.substr(1, close - 1));
      rest = trim(rest.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') {
        throw ArgumentError(fmt::format("config line {}: trailing text after string", lineno));
      }
      quoted = true;
    } else {
      value = std::string(trim(rest.substr(0, rest.find('#'))));
    }
    if (key.empty() || (!quoted && value.empty())) {
      throw ArgumentError(fmt::format("config line {}: empty key or value", lineno));
    }
    try {
      cfg.set(key, value);
    } catch (const ArgumentError& e) {
      throw ArgumentError(fmt::format("config line {}: {}", lineno, e.what()));
    }
  }
  if (!base_dir.empty()) {
    if (!cfg.track.empty() && cfg.track.is_relative()) {
      cfg.track = base_dir / cfg.track;
    }
    if (cfg.out.is_relative()) {
      cfg.out = base_dir / cfg.out;
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ArgumentError(fmt::format("cannot read '{}'", path.string()));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ArgumentError(fmt::format("cannot write '{}'", path.string()));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

Json bundle_to_json(const ResultBundle& b) {
  Json log = Json::array();
  for (const auto& r : b.log) {
    log.push_back(Json{{"iteration", r.iteration},
                       {"objective", r.objective},
                       {"sum_k2", r.sum_k2},
                       {"accepted", r.accepted},
                       {"status", std::string(to_string(r.status))}});
  }
  const auto& s = b.solution;
  Json diag{{"num_vars", b.num_vars},
            {"num_rows", b.num_rows},
            {"num_samples", b.centerline_disc.size()},
            {"status", std::string(to_string(s.status))},
            {"qp_iterations", s.iterations},
            {"polished", s.polished},
            {"objective", s.objective},
            {"kkt_stationarity", s.kkt_stationarity},
            {"kkt_primal", s.kkt_primal},
            {"kkt_complementarity", s.kkt_complementarity},
            {"iteration_log", log}};
  const auto& c = b.config;
  Json config{{"track", b.track_name},
              {"ds", c.ds},
              {"ctrl_points", b.centerline.num_ctrl()},
              {"margin_m", c.margin_m},
              {"iterations", c.iterations},
              {"kkt_tol", c.kkt_tol},
              {"regularization", c.regularization},
              {"slide_limit_m", c.slide_limit_m},
              {"window", c.window},
              {"closed_loop", c.closed_loop}};
  return Json{
      {"config", config},
      {"vehicle", vehicle_to_json(c.vehicle)},
      {"centerline",
       {{"spline", spline_to_json(b.centerline)},
        {"fit", {{"max_deviation_m", b.fit.max_deviation},
                 {"rms_deviation_m", b.fit.rms_deviation},
                 {"worst_waypoint", b.fit.worst_waypoint + 1}}},
        {"discretization", profile_summary(b.centerline_disc)},
        {"metrics", metrics_to_json(b.centerline_metrics)},
        {"trace", "centerline_trace.csv"}}},
      {"optimized",
       {{"spline", spline_to_json(b.optimized)},
        {"discretization", profile_summary(b.optimized_disc)},
        {"metrics", metrics_to_json(b.optimized_metrics)},
        {"trace", "optimized_trace.csv"}}},
      {"diagnostics", diag},
      {"warnings", b.warnings},
  };
}

void write_bundle(const ResultBundle& b, const CenterlineModel& cm,
                  const std::filesystem::path& dir) {
  write_file(dir / "bundle.json", bundle_to_json(b).dump(2) + "\n");
  write_file(dir / "centerline_trace.csv",
             format_trace_csv(b.centerline_disc, b.centerline_profile));
  write_file(dir / "optimized_trace.csv", format_trace_csv(b.optimized_disc, b.optimized_profile));
  write_file(dir / "boundaries.csv", format_boundaries_csv(cm));
  write_file(dir / "comparison.txt", comparison_table(b.centerline_metrics, b.optimized_metrics));
}

}  // namespace raceline
