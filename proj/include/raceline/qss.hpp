#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "raceline/spline.hpp"

namespace raceline {

struct TractionEllipse {
  double a_acc_max = 10.0;
  double a_dec_max = 20.0;  // braking magnitude
  double a_lat_left = 15.0;
  double a_lat_right = 15.0;
  std::optional<double> v_max;

  /// Throws ArgumentError unless every limit is strictly positive.
  void validate() const;
  /// Lateral limit for the turn direction of k (k > 0 turns left).
  double lateral_limit(double k) const { return k > 0.0 ? a_lat_left : a_lat_right; }
};

/// Steady-state cornering speed; +infinity on a straight without v_max.
double corner_speed(double k, const TractionEllipse& te);

/// Apexes: strict local maxima of |k| (leftmost sample of a plateau) whose
/// corner speed is below the cap. Cyclic neighbourhood when `closed`.
std::vector<std::size_t> find_bottlenecks(std::span<const double> curvatures,
                                          const TractionEllipse& te, bool closed = true);

struct VelocityProfile {
  std::vector<double> v;
  std::vector<double> a_lon;  // over the segment leaving each sample
  std::vector<double> a_lat;
  std::vector<double> t_cum;
  double lap_time = 0.0;
  std::vector<std::size_t> bottlenecks;
};

VelocityProfile qss_profile(const DiscretizationSet& disc, const TractionEllipse& te);

struct LapMetrics {
  double lap_time = 0.0;
  double avg_speed = 0.0;
  double max_speed = 0.0;
  double min_speed = 0.0;
  double max_lat_g = 0.0;     // m/s^2
  double max_throttle = 0.0;  // m/s^2
  double max_braking = 0.0;   // m/s^2, nonpositive
};

LapMetrics lap_metrics(const VelocityProfile& profile, const DiscretizationSet& disc);

/// Largest (a_lon/limit)^2 + (a_lat/limit)^2 over all samples. Each sample's
/// lateral load is paired with the braking on its outgoing segment and the
/// throttle on its incoming one.
double max_ellipse_usage(const VelocityProfile& profile, std::span<const double> curvatures,
                         const TractionEllipse& te);

}  // namespace raceline
