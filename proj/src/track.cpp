#include "raceline/track.hpp"

#include <algorithm>
#include <cmath>
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

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row, std::string_view column) {
  const std::string text(field);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ValidationError(
        fmt::format("row {}: column {} holds non-numeric or non-finite value '{}'", row, column,
                    text));
  }
  return v;
}

bool segments_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const auto orient = [](const Point2& p, const Point2& q, const Point2& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
         o4 != 0;
}

double median_spacing(const std::vector<Point2>& pts) {
  std::vector<double> gaps;
  gaps.reserve(pts.size());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    gaps.push_back((pts[i] - pts[i - 1]).norm());
  }
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

// Linear interpolation of per-waypoint values at arc position s.
double interpolate_cyclic(const std::vector<double>& knots_s, const std::vector<double>& values,
                          double total, bool closed, double s) {
  const std::size_t n = knots_s.size();
  auto it = std::upper_bound(knots_s.begin(), knots_s.end(), s);
  if (it == knots_s.begin()) {
    return values.front();
  }
  const std::size_t hi = static_cast<std::size_t>(it - knots_s.begin());
  const std::size_t lo = hi - 1;
  if (hi == n) {
    if (!closed) {
      return values.back();
    }
    const double span = total - knots_s[lo];
    const double w = span > 0.0 ? (s - knots_s[lo]) / span : 0.0;
    return (1.0 - w) * values[lo] + w * values.front();
  }
  const double span = knots_s[hi] - knots_s[lo];
  const double w = span > 0.0 ? (s - knots_s[lo]) / span : 0.0;
  return (1.0 - w) * values[lo] + w * values[hi];
}

}  // namespace

TrackDefinition parse_track_csv(std::string_view text, std::string name, bool closed) {
  TrackDefinition def;
  def.name = std::move(name);
  def.closed = closed;
  bool header_seen = false;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (!header_seen) {
      const auto cols = split_commas(line);
      const std::vector<std::string_view> expected{"x_m", "y_m", "w_left_m", "w_right_m"};
      if (cols != expected) {
        throw ValidationError(
            fmt::format("missing or wrong header: expected '{}', got '{}'", kTrackCsvHeader, line));
      }
      header_seen = true;
      continue;
    }
    ++row;
    const auto fields = split_commas(line);
    if (fields.size() != 4) {
      throw ValidationError(fmt::format("row {}: expected 4 columns, got {}", row, fields.size()));
    }
    const double x = parse_number(fields[0], row, "x_m");
    const double y = parse_number(fields[1], row, "y_m");
    const double wl = parse_number(fields[2], row, "w_left_m");
    const double wr = parse_number(fields[3], row, "w_right_m");
    if (!(wl > 0.0)) {
      throw ValidationError(fmt::format("row {}: w_left_m must be positive, got {}", row, wl));
    }
    if (!(wr > 0.0)) {
      throw ValidationError(fmt::format("row {}: w_right_m must be positive, got {}", row, wr));
    }
    def.waypoints.emplace_back(x, y);
    def.w_left.push_back(wl);
    def.w_right.push_back(wr);
  }
  if (!header_seen) {
    throw ValidationError(fmt::format("missing header '{}'", kTrackCsvHeader));
  }
  if (def.closed && def.waypoints.size() >= 2 &&
      (def.waypoints.front() - def.waypoints.back()).norm() < 1e-6) {
    def.waypoints.pop_back();
    def.w_left.pop_back();
    def.w_right.pop_back();
  }
  validate_track(def);
  return def;
}

TrackDefinition load_track(const std::filesystem::path& path, bool closed) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(fmt::format("cannot read track file '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_track_csv(buffer.str(), path.stem().string(), closed);
}

void validate_track(const TrackDefinition& def) {
  const std::size_t n = def.waypoints.size();
  if (n < 20) {
    throw ValidationError(fmt::format("track needs at least 20 waypoints, got {}", n));
  }
  if (def.w_left.size() != n || def.w_right.size() != n) {
    throw ValidationError("width columns must match the waypoint count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!def.waypoints[i].allFinite()) {
      throw ValidationError(fmt::format("row {}: non-finite waypoint", i + 1));
    }
    if (!(def.w_left[i] > 0.0) || !(def.w_right[i] > 0.0)) {
      throw ValidationError(fmt::format("row {}: widths must be positive", i + 1));
    }
  }
  const double median = median_spacing(def.waypoints);
  if (def.closed) {
    const double gap = (def.waypoints.front() - def.waypoints.back()).norm();
    if (!(gap < 10.0 * median)) {
      throw ValidationError(fmt::format(
          "open loop: first and last waypoints are {:.3f} m apart (limit {:.3f} m)", gap,
          10.0 * median));
    }
  }
  const std::size_t segs = def.closed ? n : n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    const Point2& a = def.waypoints[i];
    const Point2& b = def.waypoints[(i + 1) % n];
    for (std::size_t j = i + 2; j < segs; ++j) {
      if (def.closed && i == 0 && j == n - 1) {
        continue;
      }
      if (segments_cross(a, b, def.waypoints[j], def.waypoints[(j + 1) % n])) {
        throw ValidationError(
            fmt::format("centerline self-intersects between rows {} and {}", i + 1, j + 1));
      }
    }
  }
}

FitReport fit_report(const SplineTrajectory& spline, const TrackDefinition& def) {
  const auto params = chord_parameters(def.waypoints, def.closed);
  FitReport r;
  double sum_sq = 0.0;
  for (std::size_t j = 0; j < def.waypoints.size(); ++j) {
    const double dev = (evaluate(spline, params[j]) - def.waypoints[j]).norm();
    sum_sq += dev * dev;
    if (dev > r.max_deviation) {
      r.max_deviation = dev;
      r.worst_waypoint = j;
    }
  }
  r.rms_deviation = std::sqrt(sum_sq / static_cast<double>(def.waypoints.size()));
  return r;
}

CenterlineModel build_centerline(const TrackDefinition& def, const CenterlineOptions& opts) {
  validate_track(def);
  if (!(opts.margin >= 0.0)) {
    throw ArgumentError("margin must be nonnegative");
  }
  auto spline = def.closed ? fit_periodic(def.waypoints, opts.num_ctrl, opts.degree)
                           : fit_open(def.waypoints, opts.num_ctrl, opts.degree);
  auto disc = discretize_by_arclength(spline, opts.spacing);

  // Arc position of every waypoint along the fitted curve, from its fit parameter.
  const auto params = chord_parameters(def.waypoints, def.closed);
  std::vector<double> waypoint_s(params.size(), 0.0);
  for (std::size_t j = 1; j < params.size(); ++j) {
    waypoint_s[j] = waypoint_s[j - 1] + arc_length(spline, params[j - 1], params[j]);
  }

  CenterlineModel cm{std::move(spline), std::move(disc), {}, {}, opts.margin, {}, {}};
  const std::size_t m = cm.disc.size();
  cm.left.resize(m);
  cm.right.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = cm.disc.arc[i];
    cm.left[i] =
        interpolate_cyclic(waypoint_s, def.w_left, cm.disc.total_length, def.closed, s) -
        opts.margin;
    cm.right[i] =
        interpolate_cyclic(waypoint_s, def.w_right, cm.disc.total_length, def.closed, s) -
        opts.margin;
    if (!(cm.left[i] > 0.0) || !(cm.right[i] > 0.0)) {
      throw InfeasibleError(fmt::format(
          "margin {} m leaves no usable width at sample {} (left {:.3f} m, right {:.3f} m)",
          opts.margin, i, cm.left[i] + opts.margin, cm.right[i] + opts.margin));
    }
  }
  cm.fit = fit_report(cm.spline, def);
  if (cm.fit.max_deviation > opts.fit_tolerance) {
    cm.warnings.push_back(fmt::format(
        "centerline fit deviates {:.3f} m from waypoint {} (tolerance {:.3f} m)",
        cm.fit.max_deviation, cm.fit.worst_waypoint + 1, opts.fit_tolerance));
  }
  return cm;
}

BoundaryPolylines boundary_polylines(const CenterlineModel& cm) {
  BoundaryPolylines out;
  const std::size_t m = cm.disc.size();
  out.left.reserve(m);
  out.right.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 n = cm.disc.normal(i);
    out.left.push_back(cm.disc.positions[i] + cm.left[i] * n);
    out.right.push_back(cm.disc.positions[i] - cm.right[i] * n);
  }
  return out;
}

}  // namespace raceline
