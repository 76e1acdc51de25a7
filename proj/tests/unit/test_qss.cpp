#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "raceline/error.hpp"
#include "raceline/pipeline.hpp"
#include "raceline/qss.hpp"

using namespace raceline;

namespace {

DiscretizationSet line_with(std::vector<double> k, double ds) {
  DiscretizationSet d;
  d.closed = false;
  d.spacing = ds;
  for (std::size_t i = 0; i < k.size(); ++i) {
    d.params.push_back(static_cast<double>(i) / static_cast<double>(k.size() - 1));
    d.positions.emplace_back(ds * static_cast<double>(i), 0.0);
    d.headings.push_back(0.0);
    d.arc.push_back(ds * static_cast<double>(i));
  }
  d.curvatures = std::move(k);
  d.total_length = d.arc.back();
  return d;
}

}  // namespace

TEST(CornerSpeed, Formula) {
  TractionEllipse te;
  te.a_lat_left = 16.0;
  te.a_lat_right = 9.0;
  EXPECT_DOUBLE_EQ(corner_speed(0.01, te), 40.0);
  EXPECT_DOUBLE_EQ(corner_speed(-0.01, te), 30.0);
  EXPECT_TRUE(std::isinf(corner_speed(0.0, te)));
  te.v_max = 35.0;
  EXPECT_DOUBLE_EQ(corner_speed(0.01, te), 35.0);
  EXPECT_DOUBLE_EQ(corner_speed(0.0, te), 35.0);
}

TEST(Ellipse, RejectsNonPositiveLimits) {
  TractionEllipse te;
  te.a_dec_max = 0.0;
  EXPECT_THROW(te.validate(), ArgumentError);
  te = {};
  te.v_max = -1.0;
  EXPECT_THROW(te.validate(), ArgumentError);
}

TEST(Bottlenecks, StrictMaximaAndPlateaus) {
  TractionEllipse te;
  const std::vector<double> k{0.0, 0.01, 0.02, 0.01, 0.0, -0.03, -0.03, 0.0};
  EXPECT_EQ(find_bottlenecks(k, te), (std::vector<std::size_t>{2, 5}));
}

TEST(Bottlenecks, CappedCornersAreSkipped) {
  TractionEllipse te;
  te.v_max = 20.0;
  const std::vector<double> k{0.0, 0.01, 0.0, 0.05, 0.0};
  EXPECT_EQ(find_bottlenecks(k, te), (std::vector<std::size_t>{3}));
}

TEST(Bottlenecks, StraightNeedsVmax) {
  TractionEllipse te;
  const std::vector<double> k(10, 0.0);
  EXPECT_THROW(find_bottlenecks(k, te), ArgumentError);
  te.v_max = 50.0;
  EXPECT_EQ(find_bottlenecks(k, te).size(), 10u);
}

TEST(Qss, CircleRunsAtCornerSpeed) {
  const auto disc = oracles::exact_circle(150.0, 3.0);
  TractionEllipse te;
  const auto p = qss_profile(disc, te);
  const double vc = std::sqrt(15.0 * 150.0);
  for (double v : p.v) {
    EXPECT_NEAR(v, vc, 1e-12 * vc);
  }
  EXPECT_NEAR(p.lap_time, disc.total_length / vc, 1e-9);
  EXPECT_LE(max_ellipse_usage(p, disc.curvatures, te), 1.0 + 1e-9);
}

TEST(Qss, StraightStaysAtVmax) {
  TractionEllipse te;
  te.v_max = 60.0;
  const auto p = qss_profile(line_with(std::vector<double>(50, 0.0), 2.0), te);
  for (double v : p.v) {
    EXPECT_DOUBLE_EQ(v, 60.0);
  }
  EXPECT_NEAR(p.lap_time, 98.0 / 60.0, 1e-12);
}

TEST(Qss, PureAccelerationAndBrakingOnStraight) {
  // A hairpin in the middle of a long straight; v^2 changes by 2 a ds per sample.
  std::vector<double> k(201, 0.0);
  k[100] = 0.1;
  TractionEllipse te;
  const auto p = qss_profile(line_with(k, 1.0), te);
  const double v0 = std::sqrt(15.0 / 0.1);
  EXPECT_NEAR(p.v[100], v0, 1e-12);
  EXPECT_NEAR(p.v[150] * p.v[150], v0 * v0 + 2.0 * 10.0 * 50.0, 1e-6);
  EXPECT_NEAR(p.v[90] * p.v[90], v0 * v0 + 2.0 * 20.0 * 10.0, 1e-6);
  // Flying start at the hairpin speed.
  EXPECT_NEAR(p.v[50] * p.v[50], v0 * v0 + 2.0 * 10.0 * 50.0, 1e-6);
}

TEST(Qss, RespectsTractionEllipse) {
  std::vector<double> k(400);
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] = 0.02 * std::sin(0.05 * static_cast<double>(i));
  }
  TractionEllipse te;
  te.a_lat_left = 12.0;
  const auto disc = line_with(k, 2.0);
  const auto p = qss_profile(disc, te);
  EXPECT_LE(max_ellipse_usage(p, disc.curvatures, te), 1.0 + 1e-6);
  for (std::size_t i = 0; i < k.size(); ++i) {
    EXPECT_LE(p.v[i], corner_speed(k[i], te) * (1.0 + 1e-12));
  }
}

TEST(Qss, MoreGripNeverSlower) {
  const auto disc = line_with(
      [] {
        std::vector<double> k(300);
        for (std::size_t i = 0; i < k.size(); ++i) {
          k[i] = 0.015 * std::cos(0.04 * static_cast<double>(i));
        }
        return k;
      }(),
      3.0);
  TractionEllipse te;
  double last = qss_profile(disc, te).lap_time;
  for (double scale : {1.2, 1.5, 2.0, 3.0}) {
    TractionEllipse more = te;
    more.a_acc_max *= scale;
    more.a_dec_max *= scale;
    more.a_lat_left *= scale;
    more.a_lat_right *= scale;
    const double t = qss_profile(disc, more).lap_time;
    EXPECT_LE(t, last);
    last = t;
  }
}

TEST(Qss, MetricsSummariseProfile) {
  std::vector<double> k(201, 0.0);
  k[100] = 0.1;
  TractionEllipse te;
  te.v_max = 45.0;
  const auto disc = line_with(k, 1.0);
  const auto p = qss_profile(disc, te);
  const auto m = lap_metrics(p, disc);
  EXPECT_DOUBLE_EQ(m.lap_time, p.lap_time);
  EXPECT_NEAR(m.avg_speed, 200.0 / p.lap_time, 1e-12);
  EXPECT_NEAR(m.min_speed, std::sqrt(150.0), 1e-12);
  EXPECT_LE(m.max_speed, 45.0);
  EXPECT_LE(m.max_braking, 0.0);
  EXPECT_GE(m.max_braking, -20.0 - 1e-9);
  EXPECT_LE(m.max_throttle, 10.0 + 1e-9);
}

TEST(Pipeline, SimulateSplineCircle) {
  std::vector<double> cx(24);
  std::vector<double> cy(24);
  for (int i = 0; i < 24; ++i) {
    const double a = 2.0 * M_PI * i / 24.0;
    cx[i] = 100.0 * std::cos(a);
    cy[i] = 100.0 * std::sin(a);
  }
  const auto sim = simulate_spline(SplineTrajectory::periodic_uniform(cx, cy), 2.0, {});
  EXPECT_GT(sim.metrics.lap_time, 0.0);
  EXPECT_NEAR(sim.metrics.max_speed, sim.metrics.min_speed, 0.05 * sim.metrics.max_speed);
}
