#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace raceline {

using Point2 = Eigen::Vector2d;

/// Nondecreasing knot sequence t_0..t_N together with the spline degree p.
///
/// With N+1 knots there are n = N - p raw basis functions and the full-support
/// domain is [t_p, t_n]. Periodic knot vectors carry p extra knots on each side
/// of the breakpoints 0 = b_0 < ... < b_S = 1 so that t_{j+S} - t_j = 1.
class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int degree);

  /// Uniform knots whose full-support domain is [0, 1] (no end clamping).
  static KnotVector uniform_open(int num_basis, int degree);
  /// Periodic extension of the breakpoints b_0 = 0 < ... < b_S = 1.
  static KnotVector periodic(std::span<const double> breaks, int degree);
  static KnotVector uniform_periodic(int num_ctrl, int degree);

  int degree() const { return degree_; }
  std::size_t size() const { return knots_.size(); }
  double operator[](std::size_t i) const { return knots_[i]; }
  std::span<const double> values() const { return knots_; }

  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double domain_begin() const { return knots_[degree_]; }
  double domain_end() const { return knots_[num_basis()]; }

  /// Span index k with t_k <= t < t_{k+1} and t_k < t_{k+1}. The right end of
  /// the full-support domain (and the last knot) resolves to the span on its left.
  int find_span(double t) const;

 private:
  std::vector<double> knots_;
  int degree_;
};

/// B_{i,p}(t) by the Cox-de Boor recursion, 0/0 taken as 0.
double basis_value(const KnotVector& knots, int i, int p, double t);

/// d^order B_{i,p}/dt^order via the lower-degree derivative recursion.
double basis_derivative(const KnotVector& knots, int i, int p, double t, int order);

/// All nonzero basis functions of degree knots.degree() on `span`, with
/// derivatives up to `max_order`: ders[r][j] is the r-th derivative of
/// B_{span-p+j}. Triangular-table evaluation, used on the hot path.
std::vector<std::vector<double>> basis_row(const KnotVector& knots, int span, double t,
                                           int max_order);

/// Planar B-spline T(t) = (sum a_i B_i(t), sum b_i B_i(t)) on t in [0, 1].
///
/// Periodic splines store S distinct coefficient pairs; raw basis r uses
/// coefficient r mod S, so the last p raw coefficients repeat the first p.
class SplineTrajectory {
 public:
  SplineTrajectory(KnotVector knots, std::vector<double> cx, std::vector<double> cy,
                   bool periodic);

  static SplineTrajectory periodic_uniform(std::vector<double> cx, std::vector<double> cy,
                                           int degree = 3);
  static SplineTrajectory open_uniform(std::vector<double> cx, std::vector<double> cy,
                                       int degree = 3);

  const KnotVector& knots() const { return knots_; }
  int degree() const { return knots_.degree(); }
  bool periodic() const { return periodic_; }
  /// Number of distinct control points S.
  int num_ctrl() const { return static_cast<int>(cx_.size()); }
  std::span<const double> cx() const { return cx_; }
  std::span<const double> cy() const { return cy_; }
  Point2 control_point(int i) const;

  double t_begin() const { return knots_.domain_begin(); }
  double t_end() const { return knots_.domain_end(); }

  /// Control point index driving raw basis function r.
  int ctrl_of_basis(int raw) const { return periodic_ ? raw % num_ctrl() : raw; }

  /// Parameter windows (within the domain) where control point i has influence.
  /// Periodic supports that cross t = 1 come back as two intervals.
  std::vector<std::pair<double, double>> support(int i) const;

  SplineTrajectory with_control_point(int i, const Point2& p) const;
  SplineTrajectory with_coefficients(std::vector<double> cx, std::vector<double> cy) const;

 private:
  KnotVector knots_;
  std::vector<double> cx_;
  std::vector<double> cy_;
  bool periodic_;
};

/// Position and first/second derivative at one parameter.
struct SplineJet {
  Point2 position;
  Point2 d1;
  Point2 d2;
};

Point2 evaluate(const SplineTrajectory& s, double t);
Point2 derivatives(const SplineTrajectory& s, double t, int order);
SplineJet evaluate_jet(const SplineTrajectory& s, double t);

/// Signed curvature, positive for counter-clockwise turning.
double curvature(const SplineTrajectory& s, double t);
double curvature_from(const Point2& d1, const Point2& d2);

/// Length of T over [t_a, t_b] by adaptive Gauss-Legendre per knot span.
double arc_length(const SplineTrajectory& s, double t_a, double t_b);

/// Samples equally spaced in arc length.
///
/// Sample i sits at arc position i * spacing. On a closed curve the closing
/// segment (last sample back to the first) absorbs the remainder of the lap.
struct DiscretizationSet {
  std::vector<double> params;
  std::vector<Point2> positions;
  std::vector<double> headings;
  std::vector<double> curvatures;
  std::vector<double> arc;  // arc position of each sample, arc[0] = 0
  double spacing = 0.0;
  double total_length = 0.0;
  bool closed = true;

  std::size_t size() const { return positions.size(); }
  /// Length from sample i to the next one (wrapping on closed curves).
  double segment_length(std::size_t i) const;
  std::size_t num_segments() const { return closed ? size() : size() - 1; }
  Point2 normal(std::size_t i) const;
};

DiscretizationSet discretize_by_arclength(const SplineTrajectory& s, double spacing);

/// Least-squares spline through closed-loop points at chord-length parameters.
SplineTrajectory fit_periodic(std::span<const Point2> points, int num_ctrl, int degree = 3);
/// Same fit at caller-supplied parameters in [0, 1).
SplineTrajectory fit_periodic(std::span<const Point2> points, std::span<const double> params,
                              int num_ctrl, int degree = 3);
/// Least-squares open spline at chord-length parameters in [0, 1].
SplineTrajectory fit_open(std::span<const Point2> points, int num_ctrl, int degree = 3);

/// Chord-length parameters of the points in [0, 1); closed loops include the
/// closing chord in the normalisation.
std::vector<double> chord_parameters(std::span<const Point2> points, bool closed);

}  // namespace raceline
