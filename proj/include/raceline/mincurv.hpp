#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "raceline/qp.hpp"
#include "raceline/spline.hpp"
#include "raceline/track.hpp"

namespace raceline {

/// Diagonals of the per-sample quadratic form k_j^2 ~ [x'' y''] P_j [x'' y'']',
/// with first derivatives frozen at the linearisation spline.
struct CurvatureWeights {
  std::vector<double> xx;
  std::vector<double> xy;
  std::vector<double> yy;
};

/// Weights from per-sample first derivatives. `sample_weights`, when given,
/// scales each sample's contribution (unit weights otherwise).
CurvatureWeights build_curvature_weights(std::span<const Point2> d1,
                                         std::span<const double> sample_weights = {});

/// Basis values and second derivatives at the sample parameters, one column
/// per (periodic) control point. Rows hold at most p+1 nonzeros.
struct BasisMatrices {
  SparseRowMatrix value;
  SparseRowMatrix second;
};

BasisMatrices build_basis_matrices(const SplineTrajectory& shape, std::span<const double> params);

/// Control points allowed to move, plus the second-derivative contribution of
/// the frozen ones at every sample.
struct OptimizationWindow {
  std::vector<int> free_indices;
  Eigen::VectorXd fx;
  Eigen::VectorXd fy;

  bool covers_all(int num_ctrl) const {
    return static_cast<int>(free_indices.size()) == num_ctrl;
  }
};

OptimizationWindow make_window(const SplineTrajectory& base, std::span<const double> params,
                               std::vector<int> free_indices);
OptimizationWindow full_window(const SplineTrajectory& base, std::span<const double> params);

/// Parses "a:b[,c:d]" inclusive index ranges. A range with a > b wraps past the
/// last control point. Result is sorted and unique.
std::vector<int> parse_window_ranges(std::string_view spec, int num_ctrl);

struct AssemblyOptions {
  std::span<const double> sample_weights;
  /// Bound on |t_j . (p_j(z) - c_j)|, the along-track slide of each sample off
  /// its centerline normal. Zero or less: half the sample spacing. Infinite
  /// disables the slide rows.
  double slide_limit = 0.0;
};

/// QP over z = [x coefficients of free points, y coefficients of free points].
/// Lateral rows come first, one per touched sample; slide rows follow in the
/// same sample order.
struct MinCurvatureProblem {
  QpProblem qp;
  std::vector<int> free_indices;
  std::vector<std::size_t> rows;  // sample index behind each lateral row
  Eigen::Index num_lateral_rows = 0;
  Eigen::VectorXd z_base;  // free coefficients of the linearisation spline
};

MinCurvatureProblem assemble_qp(const CenterlineModel& cm, const SplineTrajectory& base,
                                const OptimizationWindow& window,
                                const AssemblyOptions& options = {});
MinCurvatureProblem assemble_qp(const CenterlineModel& cm, const AssemblyOptions& options = {});

/// Spline with the free coefficients replaced by a QP solution vector.
SplineTrajectory apply_solution(const SplineTrajectory& base, const std::vector<int>& free_indices,
                                const Eigen::VectorXd& z);

struct OptimizerConfig {
  int iterations = 1;
  double kkt_tol = 1e-6;
  double regularization = 1e-10;
  double slide_limit = AssemblyOptions{}.slide_limit;
  std::vector<int> window;  // empty: every control point is free
  std::vector<double> sample_weights;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double sum_k2 = 0.0;
  bool accepted = false;
  QpStatus status = QpStatus::solved;
  double solve_time = 0.0;
};

struct OptimizeResult {
  SplineTrajectory spline;
  QpSolution solution;
  std::vector<IterationRecord> log;
  Eigen::Index num_vars = 0;
  Eigen::Index num_rows = 0;
};

/// Minimum-curvature raceline over all control points (or cfg.window).
OptimizeResult optimize(const CenterlineModel& cm, const OptimizerConfig& cfg = {});

/// Moves only `free_indices` of `base`; samples outside their support keep
/// bit-identical positions.
OptimizeResult optimize_window(const CenterlineModel& cm, const SplineTrajectory& base,
                               const std::vector<int>& free_indices,
                               const OptimizerConfig& cfg = {});

/// Sum of squared curvature over an arc-length resampling at `spacing`.
double sum_squared_curvature(const SplineTrajectory& s, double spacing);

/// Lateral offset n_j . (s(t_j) - c_j) at the centerline sample parameters.
struct BoundaryCheck {
  std::vector<double> offsets;
  std::vector<std::size_t> violations;
  double worst_excess = 0.0;
};

BoundaryCheck check_boundaries(const CenterlineModel& cm, const SplineTrajectory& s,
                               double tol = 1e-4);

}  // namespace raceline
