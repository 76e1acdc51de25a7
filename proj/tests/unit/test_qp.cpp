#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "raceline/error.hpp"
#include "raceline/qp.hpp"

using namespace raceline;

namespace {

QpProblem one_dim(double lo, double hi, double target) {
  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Identity(1, 1);
  qp.gradient = Eigen::VectorXd::Constant(1, -target);
  qp.constraints.resize(1, 1);
  qp.constraints.insert(0, 0) = 1.0;
  qp.lower = Eigen::VectorXd::Constant(1, lo);
  qp.upper = Eigen::VectorXd::Constant(1, hi);
  return qp;
}

}  // namespace

TEST(Qp, UnconstrainedOptimum) {
  const auto qp = one_dim(-10.0, 10.0, 3.0);
  const auto sol = solve_qp(qp, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.z[0], 3.0, 1e-9);
  EXPECT_NEAR(sol.multipliers[0], 0.0, 1e-9);
}

TEST(Qp, UpperBoundMultiplierIsPositive) {
  const auto sol = solve_qp(one_dim(-1.0, 1.0, 3.0), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.z[0], 1.0, 1e-9);
  EXPECT_NEAR(sol.multipliers[0], 2.0, 1e-8);
}

TEST(Qp, LowerBoundMultiplierIsNegative) {
  const auto sol = solve_qp(one_dim(-1.0, 1.0, -4.0), Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(sol.z[0], -1.0, 1e-9);
  EXPECT_NEAR(sol.multipliers[0], -3.0, 1e-8);
}

TEST(Qp, EqualityRow) {
  const auto sol = solve_qp(one_dim(0.25, 0.25, 3.0), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.z[0], 0.25, 1e-9);
}

TEST(Qp, CrossedBoundsAreInfeasible) {
  const auto sol = solve_qp(one_dim(1.0, -1.0, 0.0), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(sol.status, QpStatus::infeasible);
}

TEST(Qp, ConflictingRowsAreInfeasible) {
  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Identity(2, 2);
  qp.gradient = Eigen::VectorXd::Zero(2);
  qp.constraints.resize(2, 2);
  qp.constraints.insert(0, 0) = 1.0;
  qp.constraints.insert(0, 1) = 1.0;
  qp.constraints.insert(1, 0) = 1.0;
  qp.constraints.insert(1, 1) = 1.0;
  qp.lower = Eigen::Vector2d(2.0, -5.0);
  qp.upper = Eigen::Vector2d(5.0, 1.0);
  EXPECT_EQ(solve_qp(qp, Eigen::VectorXd::Zero(2)).status, QpStatus::infeasible);
}

TEST(Qp, MatchesProjectedGradientOnRandomBoxes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto qp = oracles::random_box_qp(12, rng);
    const auto sol = solve_qp(qp, Eigen::VectorXd::Zero(12));
    ASSERT_EQ(sol.status, QpStatus::solved);
    const auto ref = oracles::projected_gradient(qp, 1e-13);
    EXPECT_LT((sol.z - ref).lpNorm<Eigen::Infinity>(), 1e-7);
    EXPECT_LE(sol.kkt_stationarity, 1e-6);
    EXPECT_LE(sol.kkt_primal, 1e-6);
    EXPECT_LE(sol.kkt_complementarity, 1e-6);
  }
}

TEST(Qp, SingularHessianStaysNearStart) {
  // Objective only sees z0 - z1; the common mode is held by the regularization.
  QpProblem qp;
  qp.hessian = (Eigen::Matrix2d() << 1.0, -1.0, -1.0, 1.0).finished();
  qp.gradient = Eigen::Vector2d(-1.0, 1.0);
  qp.constraints.resize(0, 2);
  qp.lower.resize(0);
  qp.upper.resize(0);
  const Eigen::Vector2d z0(100.0, 100.0);
  const auto sol = solve_qp(qp, z0);
  EXPECT_NEAR(sol.z[0] - sol.z[1], 1.0, 1e-6);
  EXPECT_NEAR(sol.z[0] + sol.z[1], 200.0, 1e-3);
}

TEST(Qp, Deterministic) {
  std::mt19937_64 rng(5);
  const auto qp = oracles::random_box_qp(20, rng);
  const auto a = solve_qp(qp, Eigen::VectorXd::Zero(20));
  const auto b = solve_qp(qp, Eigen::VectorXd::Zero(20));
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.multipliers, b.multipliers);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Qp, DimensionMismatch) {
  auto qp = one_dim(-1.0, 1.0, 0.0);
  EXPECT_THROW(solve_qp(qp, Eigen::VectorXd::Zero(2)), ArgumentError);
  qp.lower.resize(2);
  EXPECT_THROW(solve_qp(qp, Eigen::VectorXd::Zero(1)), ArgumentError);
}

TEST(Qp, KktResidualsOfKnownPair) {
  const auto qp = one_dim(-1.0, 1.0, 3.0);
  const auto r = kkt_residuals(qp, Eigen::VectorXd::Constant(1, 1.0),
                               Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd());
  EXPECT_DOUBLE_EQ(r.stationarity, 0.0);
  EXPECT_DOUBLE_EQ(r.primal, 0.0);
  EXPECT_DOUBLE_EQ(r.complementarity, 0.0);
  const auto bad = kkt_residuals(qp, Eigen::VectorXd::Constant(1, 0.5),
                                 Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd());
  EXPECT_NEAR(bad.complementarity, 1.0, 1e-15);
}
