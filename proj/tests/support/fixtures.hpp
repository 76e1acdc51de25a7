#pragma once

#include <functional>
#include <string>

#include "raceline/track.hpp"

namespace fixtures {

using raceline::Point2;
using raceline::TrackDefinition;

/// Closed curve sampled densely, then resampled every `spacing` metres of
/// polyline length. `scale_to`, when positive, rescales the loop to that length.
TrackDefinition resampled_loop(const std::function<Point2(double)>& curve, double spacing,
                               double w_left, double w_right, double scale_to = 0.0,
                               std::string name = "loop");

/// Counter-clockwise circle centred at the origin.
TrackDefinition circle(double radius, int n, double w_left, double w_right);

TrackDefinition ring();  // R = 200, widths 6/6

/// S-curve track: stadium with 500 m straights and R = 150 turns, a 12 m lane
/// change on the lower straight and a left-right swerve on the upper one.
TrackDefinition chicane();

/// Smooth synthetic loop of exactly 5800 m with 5 m waypoint spacing.
TrackDefinition monza_like();

/// Open straight along +x, 500 m long.
TrackDefinition straight();

std::string to_csv(const TrackDefinition& def);

}  // namespace fixtures
