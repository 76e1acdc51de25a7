#include "raceline/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

constexpr double kDegenerateSpeed = 1e-9;
constexpr double kArcTolerance = 1e-6;
constexpr double kSpacingSlack = 1e-3;
constexpr int kRootIterations = 100;

bool finite_all(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// 10-point Gauss-Legendre nodes on [-1, 1] (positive half) and weights.
constexpr std::array<double, 5> kGlNodes = {0.1488743389816312, 0.4333953941292472,
                                            0.6794095682990244, 0.8650633666889845,
                                            0.9739065285171717};
constexpr std::array<double, 5> kGlWeights = {0.2955242247147529, 0.2692667193099963,
                                              0.2190863625159820, 0.1494513491505806,
                                              0.0666713443086881};

template <typename F>
double gauss_legendre(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    const double dx = half * kGlNodes[i];
    sum += kGlWeights[i] * (f(mid - dx) + f(mid + dx));
  }
  return sum * half;
}

template <typename F>
double adaptive_gl(const F& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = gauss_legendre(f, a, m);
  const double right = gauss_legendre(f, m, b);
  if (depth >= 40 || std::abs(left + right - whole) <= tol) {
    return left + right;
  }
  return adaptive_gl(f, a, m, left, 0.5 * tol, depth + 1) +
         adaptive_gl(f, m, b, right, 0.5 * tol, depth + 1);
}

double speed_at(const SplineTrajectory& s, double t) { return derivatives(s, t, 1).norm(); }

void check_domain(const SplineTrajectory& s, double t) {
  if (!(t >= s.t_begin() && t <= s.t_end())) {
    throw RangeError(fmt::format("parameter {} outside spline domain [{}, {}]", t, s.t_begin(),
                                 s.t_end()));
  }
}

double cox_de_boor(const KnotVector& k, int i, int p, double t, int span) {
  if (p == 0) {
    return i == span ? 1.0 : 0.0;
  }
  double value = 0.0;
  const double d0 = k[i + p] - k[i];
  if (d0 != 0.0) {
    value += (t - k[i]) / d0 * cox_de_boor(k, i, p - 1, t, span);
  }
  const double d1 = k[i + p + 1] - k[i + 1];
  if (d1 != 0.0) {
    value += (k[i + p + 1] - t) / d1 * cox_de_boor(k, i + 1, p - 1, t, span);
  }
  return value;
}

double cox_de_boor_derivative(const KnotVector& k, int i, int p, double t, int span,
                              int order) {
  if (order == 0) {
    return cox_de_boor(k, i, p, t, span);
  }
  double value = 0.0;
  const double d0 = k[i + p] - k[i];
  if (d0 != 0.0) {
    value += cox_de_boor_derivative(k, i, p - 1, t, span, order - 1) / d0;
  }
  const double d1 = k[i + p + 1] - k[i + 1];
  if (d1 != 0.0) {
    value -= cox_de_boor_derivative(k, i + 1, p - 1, t, span, order - 1) / d1;
  }
  return p * value;
}

void check_basis_args(const KnotVector& knots, int i, int p, double t) {
  if (p < 0 || i < 0 || i + p + 1 >= static_cast<int>(knots.size())) {
    throw RangeError(fmt::format("basis index {} of degree {} invalid for {} knots", i, p,
                                 knots.size()));
  }
  if (!(t >= knots[0] && t <= knots[knots.size() - 1])) {
    throw RangeError(fmt::format("parameter {} outside knot range", t));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// KnotVector

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) {
    throw ArgumentError("spline degree must be nonnegative");
  }
  if (knots_.size() < static_cast<std::size_t>(2 * (degree_ + 1))) {
    throw ArgumentError(fmt::format("degree {} needs at least {} knots, got {}", degree_,
                                    2 * (degree_ + 1), knots_.size()));
  }
  if (!finite_all(knots_)) {
    throw ArgumentError("knot vector contains non-finite values");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i] < knots_[i - 1]) {
      throw ArgumentError(fmt::format("knots decrease at index {}", i));
    }
  }
  if (!(domain_end() > domain_begin())) {
    throw ArgumentError("knot vector has an empty full-support domain");
  }
}

KnotVector KnotVector::uniform_open(int num_basis, int degree) {
  if (num_basis < degree + 1) {
    throw ArgumentError(
        fmt::format("{} basis functions cannot carry degree {}", num_basis, degree));
  }
  const int spans = num_basis - degree;
  std::vector<double> k(static_cast<std::size_t>(num_basis + degree + 1));
  for (std::size_t j = 0; j < k.size(); ++j) {
    k[j] = static_cast<double>(static_cast<int>(j) - degree) / spans;
  }
  return KnotVector(std::move(k), degree);
}

KnotVector KnotVector::periodic(std::span<const double> breaks, int degree) {
  const int S = static_cast<int>(breaks.size()) - 1;
  if (S < degree + 1) {
    throw ArgumentError(
        fmt::format("periodic degree-{} spline needs at least {} segments", degree, degree + 1));
  }
  if (breaks.front() != 0.0 || breaks.back() != 1.0) {
    throw ArgumentError("periodic breakpoints must span [0, 1]");
  }
  std::vector<double> k(static_cast<std::size_t>(S + 2 * degree + 1));
  for (int j = 0; j <= S; ++j) {
    k[degree + j] = breaks[j];
  }
  for (int m = 1; m <= degree; ++m) {
    k[degree - m] = breaks[S - m] - 1.0;
    k[S + degree + m] = 1.0 + breaks[m];
  }
  return KnotVector(std::move(k), degree);
}

KnotVector KnotVector::uniform_periodic(int num_ctrl, int degree) {
  std::vector<double> breaks(static_cast<std::size_t>(num_ctrl + 1));
  for (int j = 0; j <= num_ctrl; ++j) {
    breaks[j] = static_cast<double>(j) / num_ctrl;
  }
  breaks.back() = 1.0;
  return periodic(breaks, degree);
}

int KnotVector::find_span(double t) const {
  const double front = knots_.front();
  const double back = knots_.back();
  if (!(t >= front && t <= back)) {
    throw RangeError(fmt::format("parameter {} outside knot range [{}, {}]", t, front, back));
  }
  const int n = num_basis();
  if (t == domain_end() || t == back) {
    const int limit = (t == domain_end()) ? n - 1 : static_cast<int>(knots_.size()) - 2;
    for (int k = limit; k >= 0; --k) {
      if (knots_[k] < t) {
        return k;
      }
    }
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

// ---------------------------------------------------------------------------
// Basis functions

double basis_value(const KnotVector& knots, int i, int p, double t) {
  check_basis_args(knots, i, p, t);
  return cox_de_boor(knots, i, p, t, knots.find_span(t));
}

double basis_derivative(const KnotVector& knots, int i, int p, double t, int order) {
  if (order < 0 || order > p) {
    throw UnsupportedError(fmt::format("derivative order {} exceeds degree {}", order, p));
  }
  check_basis_args(knots, i, p, t);
  return cox_de_boor_derivative(knots, i, p, t, knots.find_span(t), order);
}

std::vector<std::vector<double>> basis_row(const KnotVector& knots, int span, double t,
                                           int max_order) {
  const int p = knots.degree();
  const int n = std::min(max_order, p);
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1, 0.0);
  std::vector<double> right(p + 1, 0.0);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  std::vector<std::vector<double>> ders(max_order + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) {
    ders[0][j] = ndu[j][p];
  }
  std::array<std::vector<double>, 2> a{std::vector<double>(p + 1), std::vector<double>(p + 1)};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) {
      ders[k][j] *= factor;
    }
    factor *= (p - k);
  }
  return ders;
}

// ---------------------------------------------------------------------------
// SplineTrajectory

SplineTrajectory::SplineTrajectory(KnotVector knots, std::vector<double> cx,
                                   std::vector<double> cy, bool periodic)
    : knots_(std::move(knots)), cx_(std::move(cx)), cy_(std::move(cy)), periodic_(periodic) {
  const int p = knots_.degree();
  const int S = num_ctrl();
  if (cx_.size() != cy_.size()) {
    throw ArgumentError(fmt::format("coefficient count mismatch: {} x vs {} y", cx_.size(),
                                    cy_.size()));
  }
  if (S < p + 1) {
    throw ArgumentError(fmt::format("degree {} needs at least {} control points", p, p + 1));
  }
  if (!finite_all(cx_) || !finite_all(cy_)) {
    throw ArgumentError("control points must be finite");
  }
  const std::size_t expected = periodic_ ? static_cast<std::size_t>(S + 2 * p + 1)
                                         : static_cast<std::size_t>(S + p + 1);
  if (knots_.size() != expected) {
    throw ArgumentError(fmt::format("{} control points of degree {} need {} knots, got {}", S, p,
                                    expected, knots_.size()));
  }
  if (periodic_) {
    const double period = knots_[S + p] - knots_[p];
    for (int j = 0; j <= 2 * p; ++j) {
      if (std::abs(knots_[j + S] - knots_[j] - period) > 1e-12) {
        throw ArgumentError(fmt::format("knot {} breaks periodic wrap", j));
      }
    }
  }
}

SplineTrajectory SplineTrajectory::periodic_uniform(std::vector<double> cx,
                                                    std::vector<double> cy, int degree) {
  auto knots = KnotVector::uniform_periodic(static_cast<int>(cx.size()), degree);
  return SplineTrajectory(std::move(knots), std::move(cx), std::move(cy), true);
}

SplineTrajectory SplineTrajectory::open_uniform(std::vector<double> cx, std::vector<double> cy,
                                                int degree) {
  auto knots = KnotVector::uniform_open(static_cast<int>(cx.size()), degree);
  return SplineTrajectory(std::move(knots), std::move(cx), std::move(cy), false);
}

Point2 SplineTrajectory::control_point(int i) const {
  if (i < 0 || i >= num_ctrl()) {
    throw RangeError(fmt::format("control point {} out of range [0, {})", i, num_ctrl()));
  }
  return {cx_[i], cy_[i]};
}

std::vector<std::pair<double, double>> SplineTrajectory::support(int i) const {
  if (i < 0 || i >= num_ctrl()) {
    throw RangeError(fmt::format("control point {} out of range [0, {})", i, num_ctrl()));
  }
  const int p = degree();
  const int raw_count = knots_.num_basis();
  std::vector<std::pair<double, double>> out;
  for (int r = i; r < raw_count; r += num_ctrl()) {
    const double lo = std::max(knots_[r], t_begin());
    const double hi = std::min(knots_[r + p + 1], t_end());
    if (lo < hi) {
      out.emplace_back(lo, hi);
    }
    if (!periodic_) {
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplineTrajectory SplineTrajectory::with_control_point(int i, const Point2& p) const {
  if (i < 0 || i >= num_ctrl()) {
    throw RangeError(fmt::format("control point {} out of range [0, {})", i, num_ctrl()));
  }
  auto cx = cx_;
  auto cy = cy_;
  cx[i] = p.x();
  cy[i] = p.y();
  return SplineTrajectory(knots_, std::move(cx), std::move(cy), periodic_);
}

SplineTrajectory SplineTrajectory::with_coefficients(std::vector<double> cx,
                                                     std::vector<double> cy) const {
  if (static_cast<int>(cx.size()) != num_ctrl()) {
    throw ArgumentError("replacement coefficients must keep the control point count");
  }
  return SplineTrajectory(knots_, std::move(cx), std::move(cy), periodic_);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

void accumulate_jet(const SplineTrajectory& s, double t, int max_order, Point2* out) {
  check_domain(s, t);
  const int p = s.degree();
  const int span = s.knots().find_span(t);
  const auto ders = basis_row(s.knots(), span, t, max_order);
  const auto cx = s.cx();
  const auto cy = s.cy();
  for (int r = 0; r <= max_order; ++r) {
    out[r] = Point2::Zero();
  }
  for (int j = 0; j <= p; ++j) {
    const int c = s.ctrl_of_basis(span - p + j);
    for (int r = 0; r <= max_order; ++r) {
      out[r].x() += ders[r][j] * cx[c];
      out[r].y() += ders[r][j] * cy[c];
    }
  }
}

}  // namespace

Point2 evaluate(const SplineTrajectory& s, double t) {
  Point2 out[1];
  accumulate_jet(s, t, 0, out);
  return out[0];
}

Point2 derivatives(const SplineTrajectory& s, double t, int order) {
  if (order < 0 || order > s.degree()) {
    throw UnsupportedError(
        fmt::format("derivative order {} exceeds degree {}", order, s.degree()));
  }
  std::vector<Point2> out(order + 1);
  accumulate_jet(s, t, order, out.data());
  return out[order];
}

SplineJet evaluate_jet(const SplineTrajectory& s, double t) {
  if (s.degree() < 2) {
    throw UnsupportedError("second derivatives need degree >= 2");
  }
  Point2 out[3];
  accumulate_jet(s, t, 2, out);
  return {out[0], out[1], out[2]};
}

double curvature_from(const Point2& d1, const Point2& d2) {
  const double speed = d1.norm();
  if (speed < kDegenerateSpeed) {
    throw NumericalError("degenerate parameterization: first derivative vanishes");
  }
  return (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
}

double curvature(const SplineTrajectory& s, double t) {
  const auto jet = evaluate_jet(s, t);
  return curvature_from(jet.d1, jet.d2);
}

double arc_length(const SplineTrajectory& s, double t_a, double t_b) {
  if (t_a > t_b) {
    throw ArgumentError(fmt::format("arc_length needs t_a <= t_b, got {} > {}", t_a, t_b));
  }
  check_domain(s, t_a);
  check_domain(s, t_b);
  if (t_a == t_b) {
    return 0.0;
  }
  std::vector<double> cuts{t_a};
  for (double k : s.knots().values()) {
    if (k > t_a && k < t_b && k > cuts.back()) {
      cuts.push_back(k);
    }
  }
  cuts.push_back(t_b);
  const auto speed = [&s](double t) { return speed_at(s, t); };
  const double tol = kArcTolerance / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double whole = gauss_legendre(speed, cuts[i], cuts[i + 1]);
    total += adaptive_gl(speed, cuts[i], cuts[i + 1], whole, tol, 0);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Discretization

double DiscretizationSet::segment_length(std::size_t i) const {
  if (i + 1 < size()) {
    return arc[i + 1] - arc[i];
  }
  if (closed && i + 1 == size()) {
    return total_length - arc[i];
  }
  throw RangeError(fmt::format("segment {} out of range", i));
}

Point2 DiscretizationSet::normal(std::size_t i) const {
  return {-std::sin(headings[i]), std::cos(headings[i])};
}

namespace {

// Parameter t > t_prev with arc_length(t_prev, t) == target.
double advance_by_arc(const SplineTrajectory& s, double t_prev, double target) {
  double lo = t_prev;
  double hi = s.t_end();
  double t = t_prev;
  double covered = 0.0;
  for (int iter = 0; iter < kRootIterations; ++iter) {
    const double residual = covered - target;
    if (std::abs(residual) <= 1e-9) {
      return t;
    }
    if (residual < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = t - residual / speed_at(s, t);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (hi - lo <= 1e-15) {
      return t;
    }
    covered += next > t ? arc_length(s, t, next) : -arc_length(s, next, t);
    t = next;
  }
  throw NumericalError(
      fmt::format("arc-length root find did not converge after {} iterations", kRootIterations));
}

}  // namespace

DiscretizationSet discretize_by_arclength(const SplineTrajectory& s, double spacing) {
  const double total = arc_length(s, s.t_begin(), s.t_end());
  if (!(spacing > 0.0) || !(spacing < total / 8.0)) {
    throw ArgumentError(fmt::format("spacing {} m must lie in (0, {} m)", spacing, total / 8.0));
  }
  DiscretizationSet d;
  d.spacing = spacing;
  d.total_length = total;
  d.closed = s.periodic();
  auto count = static_cast<std::size_t>(std::floor((total + kSpacingSlack) / spacing));
  if (!d.closed) {
    count += 1;
  }
  d.params.reserve(count);
  double t = s.t_begin();
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      const double remaining = total - d.arc.back();
      t = remaining <= spacing ? s.t_end() : advance_by_arc(s, t, spacing);
    }
    d.params.push_back(t);
    d.arc.push_back(i == 0 ? 0.0 : std::min(d.arc.back() + spacing, total));
  }
  d.positions.reserve(count);
  d.headings.reserve(count);
  d.curvatures.reserve(count);
  for (double ti : d.params) {
    const auto jet = evaluate_jet(s, ti);
    d.positions.push_back(jet.position);
    d.headings.push_back(std::atan2(jet.d1.y(), jet.d1.x()));
    d.curvatures.push_back(curvature_from(jet.d1, jet.d2));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Fitting

std::vector<double> chord_parameters(std::span<const Point2> points, bool closed) {
  std::vector<double> u(points.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = 1; j < points.size(); ++j) {
    acc += (points[j] - points[j - 1]).norm();
    u[j] = acc;
  }
  const double total = closed ? acc + (points.front() - points.back()).norm() : acc;
  if (!(total > 0.0)) {
    throw FitError("points have zero chord length");
  }
  for (double& v : u) {
    v /= total;
  }
  if (!closed) {
    u.back() = 1.0;
  }
  return u;
}

namespace {

SplineTrajectory least_squares(std::span<const Point2> points, std::span<const double> params,
                               const KnotVector& knots, int num_ctrl, bool periodic) {
  const int p = knots.degree();
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(num_ctrl, num_ctrl);
  Eigen::VectorXd rhs_x = Eigen::VectorXd::Zero(num_ctrl);
  Eigen::VectorXd rhs_y = Eigen::VectorXd::Zero(num_ctrl);
  std::vector<int> cols(p + 1);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const int span = knots.find_span(params[j]);
    const auto row = basis_row(knots, span, params[j], 0)[0];
    for (int a = 0; a <= p; ++a) {
      const int raw = span - p + a;
      cols[a] = periodic ? raw % num_ctrl : raw;
    }
    for (int a = 0; a <= p; ++a) {
      rhs_x[cols[a]] += row[a] * points[j].x();
      rhs_y[cols[a]] += row[a] * points[j].y();
      for (int b = 0; b <= p; ++b) {
        normal(cols[a], cols[b]) += row[a] * row[b];
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double rcond = hi > 0.0 ? lo / hi : 0.0;
  if (!(rcond > 1e-12)) {
    throw FitError(fmt::format(
        "rank-deficient normal equations for {} control points and {} points "
        "(reciprocal condition {:.3e}); reduce the control point count",
        num_ctrl, points.size(), rcond));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  const Eigen::VectorXd ax = llt.solve(rhs_x);
  const Eigen::VectorXd ay = llt.solve(rhs_y);
  return SplineTrajectory(knots, std::vector<double>(ax.data(), ax.data() + num_ctrl),
                          std::vector<double>(ay.data(), ay.data() + num_ctrl), periodic);
}

void check_fit_args(std::size_t num_points, int num_ctrl, int degree) {
  if (degree < 1) {
    throw ArgumentError("fit degree must be at least 1");
  }
  if (num_ctrl < degree + 1) {
    throw ArgumentError(
        fmt::format("{} control points is below degree + 1 = {}", num_ctrl, degree + 1));
  }
  if (static_cast<std::size_t>(num_ctrl) > num_points) {
    throw FitError(fmt::format(
        "{} control points exceed the {} input points; reduce the control point count", num_ctrl,
        num_points));
  }
}

}  // namespace

SplineTrajectory fit_periodic(std::span<const Point2> points, std::span<const double> params,
                              int num_ctrl, int degree) {
  if (points.size() != params.size()) {
    throw ArgumentError("one parameter per point is required");
  }
  check_fit_args(points.size(), num_ctrl, degree);
  for (double u : params) {
    if (!(u >= 0.0 && u < 1.0)) {
      throw RangeError(fmt::format("fit parameter {} outside [0, 1)", u));
    }
  }
  return least_squares(points, params, KnotVector::uniform_periodic(num_ctrl, degree), num_ctrl,
                       true);
}

SplineTrajectory fit_periodic(std::span<const Point2> points, int num_ctrl, int degree) {
  std::size_t n = points.size();
  if (n >= 2 && (points.front() - points.back()).norm() < 1e-6) {
    --n;
  }
  const auto loop = points.first(n);
  const auto params = chord_parameters(loop, true);
  return fit_periodic(loop, params, num_ctrl, degree);
}

SplineTrajectory fit_open(std::span<const Point2> points, int num_ctrl, int degree) {
  check_fit_args(points.size(), num_ctrl, degree);
  const auto params = chord_parameters(points, false);
  return least_squares(points, params, KnotVector::uniform_open(num_ctrl, degree), num_ctrl,
                       false);
}

}  // namespace raceline
