#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "raceline/spline.hpp"

namespace raceline {

/// Surveyed centerline with per-waypoint distances to the track edges.
struct TrackDefinition {
  std::string name;
  std::vector<Point2> waypoints;
  std::vector<double> w_left;
  std::vector<double> w_right;
  bool closed = true;
};

/// Column header of the track CSV format.
inline constexpr std::string_view kTrackCsvHeader = "x_m,y_m,w_left_m,w_right_m";

/// Parses `x_m,y_m,w_left_m,w_right_m` rows; lines starting with '#' are comments.
/// A trailing row repeating the first waypoint is dropped. Errors name the
/// 1-based data row.
TrackDefinition parse_track_csv(std::string_view text, std::string name, bool closed = true);
TrackDefinition load_track(const std::filesystem::path& path, bool closed = true);

/// Throws ValidationError on any broken TrackDefinition invariant.
void validate_track(const TrackDefinition& def);

struct CenterlineOptions {
  double spacing = 3.0;
  int num_ctrl = 0;
  double margin = 0.0;
  double fit_tolerance = 0.25;
  int degree = 3;
};

struct FitReport {
  double max_deviation = 0.0;
  double rms_deviation = 0.0;
  std::size_t worst_waypoint = 0;
};

/// Fitted centerline, its arc-length samples, and the usable width at every sample.
struct CenterlineModel {
  SplineTrajectory spline;
  DiscretizationSet disc;
  std::vector<double> left;   // leftward room at each sample, margin removed
  std::vector<double> right;  // rightward room at each sample, margin removed
  double margin = 0.0;
  FitReport fit;
  std::vector<std::string> warnings;
};

CenterlineModel build_centerline(const TrackDefinition& def, const CenterlineOptions& opts);

/// Deviation of the spline from the waypoints at their fit parameters.
FitReport fit_report(const SplineTrajectory& spline, const TrackDefinition& def);

struct BoundaryPolylines {
  std::vector<Point2> left;
  std::vector<Point2> right;
};

BoundaryPolylines boundary_polylines(const CenterlineModel& cm);

}  // namespace raceline
