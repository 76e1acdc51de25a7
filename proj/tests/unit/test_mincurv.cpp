#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "raceline/error.hpp"
#include "raceline/mincurv.hpp"

using namespace raceline;

namespace {

const CenterlineModel& chicane_model() {
  static const CenterlineModel cm = [] {
    CenterlineOptions o;
    o.num_ctrl = 80;
    return build_centerline(fixtures::chicane(), o);
  }();
  return cm;
}

}  // namespace

TEST(Weights, MatchCurvatureQuadraticForm) {
  const Point2 d1(3.0, -2.0);
  const Point2 d2(0.7, 1.9);
  const auto w = build_curvature_weights(std::span<const Point2>(&d1, 1));
  const double quad =
      w.xx[0] * d2.x() * d2.x() + w.xy[0] * d2.x() * d2.y() + w.yy[0] * d2.y() * d2.y();
  const double k = curvature_from(d1, d2);
  EXPECT_NEAR(quad, k * k, 1e-15);
}

TEST(Weights, SampleWeightsScale) {
  const Point2 d1(1.0, 1.0);
  const double two = 2.0;
  const auto a = build_curvature_weights(std::span<const Point2>(&d1, 1));
  const auto b = build_curvature_weights(std::span<const Point2>(&d1, 1), std::span(&two, 1));
  EXPECT_DOUBLE_EQ(b.xy[0], 2.0 * a.xy[0]);
}

TEST(Weights, DegenerateDerivative) {
  const Point2 d1(0.0, 0.0);
  EXPECT_THROW(build_curvature_weights(std::span<const Point2>(&d1, 1)), NumericalError);
}

TEST(Window, ParsesRangesAndWraps) {
  EXPECT_EQ(parse_window_ranges("2:4,9", 12), (std::vector<int>{2, 3, 4, 9}));
  EXPECT_EQ(parse_window_ranges("10:1", 12), (std::vector<int>{0, 1, 10, 11}));
  EXPECT_EQ(parse_window_ranges("3:3,3", 12), (std::vector<int>{3}));
  EXPECT_THROW(parse_window_ranges("0:12", 12), RangeError);
  EXPECT_THROW(parse_window_ranges("a:3", 12), ArgumentError);
  EXPECT_THROW(parse_window_ranges(",", 12), ArgumentError);
}

TEST(Assemble, AllFreeShape) {
  const auto& cm = chicane_model();
  const auto p = assemble_qp(cm);
  EXPECT_EQ(p.qp.num_vars(), 160);
  EXPECT_TRUE(p.qp.gradient.isZero(0.0));
  EXPECT_EQ(p.num_lateral_rows, static_cast<Eigen::Index>(cm.disc.size()));
  EXPECT_EQ(p.qp.num_rows(), 2 * p.num_lateral_rows);
  EXPECT_TRUE(p.qp.hessian.isApprox(p.qp.hessian.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.qp.hessian, Eigen::EigenvaluesOnly);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * eig.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(Assemble, ObjectiveAtBaseIsSumOfSquaredCurvature) {
  const auto& cm = chicane_model();
  const auto p = assemble_qp(cm);
  double sum = 0.0;
  for (double k : cm.disc.curvatures) {
    sum += k * k;
  }
  EXPECT_NEAR(p.qp.objective(p.z_base), sum, 1e-10 * sum);
}

TEST(Assemble, CenterlineIsFeasible) {
  const auto& cm = chicane_model();
  const auto p = assemble_qp(cm);
  const Eigen::VectorXd cz = p.qp.constraints * p.z_base;
  EXPECT_TRUE(((cz - p.qp.lower).array() >= -1e-9).all());
  EXPECT_TRUE(((p.qp.upper - cz).array() >= -1e-9).all());
}

TEST(Assemble, UnboundedSlideDropsRows) {
  const auto& cm = chicane_model();
  AssemblyOptions o;
  o.slide_limit = std::numeric_limits<double>::infinity();
  const auto p = assemble_qp(cm, o);
  EXPECT_EQ(p.qp.num_rows(), p.num_lateral_rows);
}

TEST(Assemble, WindowKeepsTouchedRowsOnly) {
  const auto& cm = chicane_model();
  const auto w = make_window(cm.spline, cm.disc.params, {10, 11, 12});
  const auto p = assemble_qp(cm, cm.spline, w);
  EXPECT_EQ(p.qp.num_vars(), 6);
  EXPECT_LT(p.num_lateral_rows, static_cast<Eigen::Index>(cm.disc.size()) / 4);
  EXPECT_FALSE(p.qp.gradient.isZero(0.0));
  // The split objective equals the full one at the base spline, up to a constant.
  const auto full = assemble_qp(cm);
  Eigen::VectorXd dz = Eigen::VectorXd::Zero(6);
  dz[1] = 0.3;
  dz[4] = -0.2;
  Eigen::VectorXd zfull = full.z_base;
  zfull[11] += 0.3;
  zfull[80 + 11] -= 0.2;
  const double d_win = p.qp.objective(p.z_base + dz) - p.qp.objective(p.z_base);
  const double d_full = full.qp.objective(zfull) - full.qp.objective(full.z_base);
  EXPECT_NEAR(d_win, d_full, 1e-12 + 1e-9 * std::abs(d_full));
}

TEST(Optimize, ImprovesChicaneWithinBounds) {
  const auto& cm = chicane_model();
  const auto r = optimize(cm);
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_LT(r.log[1].sum_k2, 0.8 * r.log[0].sum_k2);
  EXPECT_EQ(r.solution.status, QpStatus::solved);
  const auto check = check_boundaries(cm, r.spline);
  EXPECT_TRUE(check.violations.empty());
  EXPECT_LE(check.worst_excess, 1e-4);
}

TEST(Optimize, RelinearisationNeverIncreasesAcceptedCurvature) {
  OptimizerConfig cfg;
  cfg.iterations = 3;
  const auto r = optimize(chicane_model(), cfg);
  double last = r.log[1].sum_k2;
  for (std::size_t i = 2; i < r.log.size(); ++i) {
    if (r.log[i].accepted) {
      EXPECT_LE(r.log[i].sum_k2, last);
      last = r.log[i].sum_k2;
    }
  }
}

TEST(Optimize, IterationBounds) {
  OptimizerConfig cfg;
  cfg.iterations = 6;
  EXPECT_THROW(optimize(chicane_model(), cfg), ArgumentError);
  cfg.iterations = 0;
  EXPECT_THROW(optimize(chicane_model(), cfg), ArgumentError);
}

TEST(Optimize, WindowLeavesOutsideSamplesUntouched) {
  const auto& cm = chicane_model();
  const std::vector<int> free{20, 21, 22, 23};
  const auto r = optimize_window(cm, cm.spline, free);
  for (std::size_t j = 0; j < cm.disc.size(); ++j) {
    const double t = cm.disc.params[j];
    bool inside = false;
    for (int i : free) {
      for (auto [a, b] : cm.spline.support(i)) {
        inside = inside || (t > a && t < b);
      }
    }
    if (!inside) {
      EXPECT_EQ(evaluate(r.spline, t), evaluate(cm.spline, t)) << "sample " << j;
    }
  }
}

TEST(Optimize, ForeignKnotVectorRejected) {
  const auto& cm = chicane_model();
  std::vector<double> cx(40, 0.0);
  std::vector<double> cy(40, 0.0);
  for (int i = 0; i < 40; ++i) {
    cx[i] = std::cos(i * 0.157);
    cy[i] = std::sin(i * 0.157);
  }
  const auto other = SplineTrajectory::periodic_uniform(cx, cy);
  EXPECT_THROW(optimize_window(cm, other, {0}), ArgumentError);
}
