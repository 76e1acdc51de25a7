#include "fixtures.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

namespace fixtures {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TrackDefinition resampled_loop(const std::function<Point2(double)>& curve, double spacing,
                               double w_left, double w_right, double scale_to, std::string name) {
  constexpr int kDense = 200000;
  std::vector<Point2> dense(kDense + 1);
  std::vector<double> arc(kDense + 1, 0.0);
  for (int i = 0; i <= kDense; ++i) {
    dense[i] = curve(static_cast<double>(i) / kDense);
    if (i > 0) {
      arc[i] = arc[i - 1] + (dense[i] - dense[i - 1]).norm();
    }
  }
  const double scale = scale_to > 0.0 ? scale_to / arc.back() : 1.0;
  const double total = arc.back() * scale;
  const int n = static_cast<int>(std::lround(total / spacing));
  TrackDefinition def;
  def.name = std::move(name);
  std::size_t j = 0;
  for (int i = 0; i < n; ++i) {
    const double s = total * i / n / scale;
    while (arc[j + 1] < s) {
      ++j;
    }
    const double w = (s - arc[j]) / (arc[j + 1] - arc[j]);
    def.waypoints.push_back(scale * ((1.0 - w) * dense[j] + w * dense[j + 1]));
    def.w_left.push_back(w_left);
    def.w_right.push_back(w_right);
  }
  return def;
}

TrackDefinition circle(double radius, int n, double w_left, double w_right) {
  TrackDefinition def;
  def.name = "circle";
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    def.waypoints.emplace_back(radius * std::cos(a), radius * std::sin(a));
    def.w_left.push_back(w_left);
    def.w_right.push_back(w_right);
  }
  return def;
}

TrackDefinition ring() {
  auto def = circle(200.0, 252, 6.0, 6.0);
  def.name = "ring";
  return def;
}

TrackDefinition chicane() {
  constexpr double kStraight = 500.0;
  constexpr double kRadius = 150.0;
  const double total = 2.0 * kStraight + 2.0 * kPi * kRadius;
  const auto step = [](double x, double at) { return 0.5 * (1.0 + std::tanh((x - at) / 20.0)); };
  const auto lane_change = [&](double x) { return 12.0 * (step(x, 130.0) - step(x, 370.0)); };
  const auto swerve = [&](double x) {
    return 12.0 * (step(x, 100.0) - 2.0 * step(x, 250.0) + step(x, 400.0));
  };
  const auto curve = [&](double u) -> Point2 {
    double s = u * total;
    if (s < kStraight) {
      return {s, -kRadius + lane_change(s)};
    }
    s -= kStraight;
    if (s < kPi * kRadius) {
      const double a = -kPi / 2.0 + s / kRadius;
      return {kStraight + kRadius * std::cos(a), kRadius * std::sin(a)};
    }
    s -= kPi * kRadius;
    if (s < kStraight) {
      return {kStraight - s, kRadius + swerve(kStraight - s)};
    }
    s -= kStraight;
    const double a = kPi / 2.0 + s / kRadius;
    return {kRadius * std::cos(a), kRadius * std::sin(a)};
  };
  return resampled_loop(curve, 5.0, 6.0, 6.0, 0.0, "chicane");
}

TrackDefinition monza_like() {
  const auto curve = [](double u) -> Point2 {
    const double th = 2.0 * kPi * u;
    const double r = 1.0 + 0.22 * std::cos(3.0 * th + 0.4) + 0.12 * std::sin(2.0 * th) +
                     0.05 * std::cos(5.0 * th + 1.0);
    return {1.6 * r * std::cos(th), r * std::sin(th)};
  };
  return resampled_loop(curve, 5.0, 6.0, 6.0, 5800.0, "monza_like");
}

TrackDefinition straight() {
  TrackDefinition def;
  def.name = "straight";
  def.closed = false;
  for (int i = 0; i <= 100; ++i) {
    def.waypoints.emplace_back(5.0 * i, 0.0);
    def.w_left.push_back(5.0);
    def.w_right.push_back(5.0);
  }
  return def;
}

std::string to_csv(const TrackDefinition& def) {
  std::string out = "x_m,y_m,w_left_m,w_right_m\n";
  for (std::size_t i = 0; i < def.waypoints.size(); ++i) {
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", def.waypoints[i].x(),
                       def.waypoints[i].y(), def.w_left[i], def.w_right[i]);
  }
  return out;
}

}  // namespace fixtures
