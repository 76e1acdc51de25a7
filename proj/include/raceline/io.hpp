#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "raceline/mincurv.hpp"
#include "raceline/qss.hpp"
#include "raceline/spline.hpp"
#include "raceline/track.hpp"

namespace raceline {

using Json = nlohmann::json;

inline constexpr std::string_view kTraceCsvHeader =
    "t,x_m,y_m,heading_rad,curvature_1pm,v_mps,a_lon_mps2,a_lat_mps2,t_cum_s";

// {degree, periodic, knots[], cx[], cy[]}
Json spline_to_json(const SplineTrajectory& s);
SplineTrajectory spline_from_json(const Json& j);

std::string format_trace_csv(const DiscretizationSet& disc, const VelocityProfile& prof);
/// Rebuilds a discretization from a trace. Segment lengths come from the chord
/// and the mean curvature of its end samples.
DiscretizationSet parse_trace_csv(std::string_view text, bool closed);

std::string format_heatmap_csv(const DiscretizationSet& disc, const VelocityProfile& prof);
std::string format_boundaries_csv(const CenterlineModel& cm);

Json metrics_to_json(const LapMetrics& m);
LapMetrics metrics_from_json(const Json& j);
Json vehicle_to_json(const TractionEllipse& te);

/// Seven-row centerline vs optimized comparison with a Delta (%) column.
std::string comparison_table(const LapMetrics& center, const LapMetrics& optimized);

struct RunConfig {
  std::filesystem::path track;
  double ds = 3.0;
  int ctrl_points = 0;  // 0: one control point per 50 m of waypoint polyline
  double margin_m = 0.0;
  double fit_tolerance = 0.25;
  std::filesystem::path out = "out";
  int iterations = 1;
  double kkt_tol = 1e-6;
  double regularization = 1e-10;
  double slide_limit_m = 0.0;  // 0: half of ds; "none": unbounded
  std::string window;
  bool closed_loop = true;
  TractionEllipse vehicle;
  std::vector<std::string> vehicle_defaults;  // keys left at their default value

  void set(std::string_view key, std::string_view value);
  void validate() const;
  CenterlineOptions centerline_options(const TrackDefinition& def) const;
  OptimizerConfig optimizer_config(int num_ctrl) const;
};

/// Flat `key = value` text; `#` starts a comment; strings may be quoted.
/// Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Everything cmd_optimize writes; serialisation is byte-stable.
struct ResultBundle {
  std::string track_name;
  RunConfig config;
  SplineTrajectory centerline;
  FitReport fit;
  SplineTrajectory optimized;
  DiscretizationSet centerline_disc;
  DiscretizationSet optimized_disc;
  VelocityProfile centerline_profile;
  VelocityProfile optimized_profile;
  LapMetrics centerline_metrics;
  LapMetrics optimized_metrics;
  QpSolution solution;
  std::vector<IterationRecord> log;
  Eigen::Index num_vars = 0;
  Eigen::Index num_rows = 0;
  std::vector<std::string> warnings;
};

Json bundle_to_json(const ResultBundle& b);
void write_bundle(const ResultBundle& b, const CenterlineModel& cm,
                  const std::filesystem::path& dir);

}  // namespace raceline
