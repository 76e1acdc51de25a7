#pragma once

#include <random>

#include "raceline/qp.hpp"
#include "raceline/spline.hpp"

namespace oracles {

struct KnotJumps {
  int knots = 0;
  double position = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// Left and right polynomial pieces evaluated at every knot of the domain
/// (including the wrap of a periodic spline).
KnotJumps knot_jumps(const raceline::SplineTrajectory& s);

/// Max relative curvature error against central differences of evaluate().
double curvature_oracle_error(const raceline::SplineTrajectory& s, int draws, unsigned seed);

/// Chord sum over n uniform parameter steps.
double polyline_length(const raceline::SplineTrajectory& s, int n);

/// Strictly convex QP with box limits, half as variable bounds and half as
/// identity constraint rows.
raceline::QpProblem random_box_qp(int dim, std::mt19937_64& rng);

/// Projected gradient descent on the box implied by random_box_qp.
Eigen::VectorXd projected_gradient(const raceline::QpProblem& qp, double tol);

/// Analytic circle sampled every ds, counter-clockwise.
raceline::DiscretizationSet exact_circle(double radius, double ds);

}  // namespace oracles
