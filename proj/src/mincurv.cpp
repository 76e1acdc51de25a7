#include "raceline/mincurv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

constexpr double kDegenerateSpeed = 1e-9;

void check_same_shape(const SplineTrajectory& a, const SplineTrajectory& b) {
  const auto ka = a.knots().values();
  const auto kb = b.knots().values();
  if (a.num_ctrl() != b.num_ctrl() || a.periodic() != b.periodic() ||
      !std::equal(ka.begin(), ka.end(), kb.begin(), kb.end())) {
    throw ArgumentError("spline does not share the centerline's knot vector");
  }
}

SparseRowMatrix select_columns(const SparseRowMatrix& m, const std::vector<int>& local) {
  std::vector<Eigen::Triplet<double>> trips;
  int cols = 0;
  for (int v : local) {
    cols = std::max(cols, v + 1);
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
      const int c = local[it.col()];
      if (c >= 0) {
        trips.emplace_back(static_cast<int>(r), c, it.value());
      }
    }
  }
  SparseRowMatrix out(m.rows(), cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

int parse_index(std::string_view text, int num_ctrl) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ArgumentError(fmt::format("window index '{}' is not an integer", text));
  }
  if (v < 0 || v >= num_ctrl) {
    throw RangeError(fmt::format("window index {} outside [0, {})", v, num_ctrl));
  }
  return v;
}

}  // namespace

CurvatureWeights build_curvature_weights(std::span<const Point2> d1,
                                         std::span<const double> sample_weights) {
  if (!sample_weights.empty() && sample_weights.size() != d1.size()) {
    throw ArgumentError("one sample weight per sample is required");
  }
  CurvatureWeights w;
  w.xx.resize(d1.size());
  w.xy.resize(d1.size());
  w.yy.resize(d1.size());
  for (std::size_t j = 0; j < d1.size(); ++j) {
    const double sq = d1[j].squaredNorm();
    if (!(std::sqrt(sq) >= kDegenerateSpeed)) {
      throw NumericalError(fmt::format("degenerate first derivative at sample {}", j));
    }
    const double v = sample_weights.empty() ? 1.0 : sample_weights[j];
    const double denom = sq * sq * sq;
    w.xx[j] = d1[j].y() * d1[j].y() * v / denom;
    w.xy[j] = -2.0 * d1[j].x() * d1[j].y() * v / denom;
    w.yy[j] = d1[j].x() * d1[j].x() * v / denom;
  }
  return w;
}

BasisMatrices build_basis_matrices(const SplineTrajectory& shape, std::span<const double> params) {
  const int p = shape.degree();
  if (p < 2) {
    throw UnsupportedError("second-derivative basis needs degree >= 2");
  }
  std::vector<Eigen::Triplet<double>> vt;
  std::vector<Eigen::Triplet<double>> st;
  vt.reserve(params.size() * static_cast<std::size_t>(p + 1));
  st.reserve(params.size() * static_cast<std::size_t>(p + 1));
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double t = params[j];
    if (!(t >= shape.t_begin() && t <= shape.t_end())) {
      throw RangeError(fmt::format("sample {} parameter {} outside the spline domain", j, t));
    }
    const int span = shape.knots().find_span(t);
    const auto ders = basis_row(shape.knots(), span, t, 2);
    for (int a = 0; a <= p; ++a) {
      const int c = shape.ctrl_of_basis(span - p + a);
      vt.emplace_back(static_cast<int>(j), c, ders[0][a]);
      st.emplace_back(static_cast<int>(j), c, ders[2][a]);
    }
  }
  BasisMatrices out;
  const auto rows = static_cast<Eigen::Index>(params.size());
  out.value.resize(rows, shape.num_ctrl());
  out.second.resize(rows, shape.num_ctrl());
  out.value.setFromTriplets(vt.begin(), vt.end());
  out.second.setFromTriplets(st.begin(), st.end());
  out.value.makeCompressed();
  out.second.makeCompressed();
  return out;
}

OptimizationWindow make_window(const SplineTrajectory& base, std::span<const double> params,
                               std::vector<int> free_indices) {
  std::sort(free_indices.begin(), free_indices.end());
  free_indices.erase(std::unique(free_indices.begin(), free_indices.end()), free_indices.end());
  if (free_indices.empty()) {
    throw ArgumentError("optimization window has no free control points");
  }
  if (free_indices.front() < 0 || free_indices.back() >= base.num_ctrl()) {
    throw RangeError(fmt::format("window index outside [0, {})", base.num_ctrl()));
  }
  OptimizationWindow w;
  const auto m = static_cast<Eigen::Index>(params.size());
  w.fx = Eigen::VectorXd::Zero(m);
  w.fy = Eigen::VectorXd::Zero(m);
  if (static_cast<int>(free_indices.size()) < base.num_ctrl()) {
    const auto mats = build_basis_matrices(base, params);
    std::vector<bool> is_free(static_cast<std::size_t>(base.num_ctrl()), false);
    for (int i : free_indices) {
      is_free[i] = true;
    }
    const auto cx = base.cx();
    const auto cy = base.cy();
    for (Eigen::Index r = 0; r < m; ++r) {
      for (SparseRowMatrix::InnerIterator it(mats.second, r); it; ++it) {
        if (!is_free[it.col()]) {
          w.fx[r] += it.value() * cx[it.col()];
          w.fy[r] += it.value() * cy[it.col()];
        }
      }
    }
  }
  w.free_indices = std::move(free_indices);
  return w;
}

OptimizationWindow full_window(const SplineTrajectory& base, std::span<const double> params) {
  std::vector<int> all(static_cast<std::size_t>(base.num_ctrl()));
  for (int i = 0; i < base.num_ctrl(); ++i) {
    all[i] = i;
  }
  return make_window(base, params, std::move(all));
}

std::vector<int> parse_window_ranges(std::string_view spec, int num_ctrl) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    auto end = spec.find(',', pos);
    if (end == std::string_view::npos) {
      end = spec.size();
    }
    const auto item = spec.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) {
      continue;
    }
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      out.push_back(parse_index(item, num_ctrl));
      continue;
    }
    const int a = parse_index(item.substr(0, colon), num_ctrl);
    const int b = parse_index(item.substr(colon + 1), num_ctrl);
    for (int i = a;; i = (i + 1) % num_ctrl) {
      out.push_back(i);
      if (i == b) {
        break;
      }
    }
  }
  if (out.empty()) {
    throw ArgumentError(fmt::format("window '{}' selects no control points", spec));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MinCurvatureProblem assemble_qp(const CenterlineModel& cm, const SplineTrajectory& base,
                                const OptimizationWindow& window,
                                const AssemblyOptions& options) {
  check_same_shape(cm.spline, base);
  const auto& disc = cm.disc;
  const auto params = std::span<const double>(disc.params);
  const auto m = static_cast<Eigen::Index>(disc.size());
  if (window.fx.size() != m || window.fy.size() != m) {
    throw ArgumentError("window was built for a different discretization");
  }
  const int num_ctrl = base.num_ctrl();
  const auto k = static_cast<Eigen::Index>(window.free_indices.size());
  const bool all_free = window.covers_all(num_ctrl);

  std::vector<int> local(static_cast<std::size_t>(num_ctrl), -1);
  for (Eigen::Index i = 0; i < k; ++i) {
    local[window.free_indices[i]] = static_cast<int>(i);
  }

  const auto mats = build_basis_matrices(base, params);
  const SparseRowMatrix b2 = select_columns(mats.second, local);
  const SparseRowMatrix b0 = select_columns(mats.value, local);

  std::vector<Point2> d1(disc.size());
  for (std::size_t j = 0; j < disc.size(); ++j) {
    d1[j] = derivatives(base, params[j], 1);
  }
  const auto w = build_curvature_weights(d1, options.sample_weights);
  const Eigen::Map<const Eigen::VectorXd> pxx(w.xx.data(), m);
  const Eigen::Map<const Eigen::VectorXd> pxy(w.xy.data(), m);
  const Eigen::Map<const Eigen::VectorXd> pyy(w.yy.data(), m);

  MinCurvatureProblem out;
  out.free_indices = window.free_indices;
  QpProblem& qp = out.qp;

  const SparseRowMatrix b2t_xx = b2.transpose() * pxx.asDiagonal();
  const SparseRowMatrix b2t_xy = b2.transpose() * pxy.asDiagonal();
  const SparseRowMatrix b2t_yy = b2.transpose() * pyy.asDiagonal();
  const Eigen::MatrixXd hxx = 2.0 * Eigen::MatrixXd(b2t_xx * b2);
  const Eigen::MatrixXd hyx = Eigen::MatrixXd(b2t_xy * b2);
  const Eigen::MatrixXd hyy = 2.0 * Eigen::MatrixXd(b2t_yy * b2);
  qp.hessian.resize(2 * k, 2 * k);
  qp.hessian.topLeftCorner(k, k) = hxx;
  qp.hessian.bottomRightCorner(k, k) = hyy;
  qp.hessian.bottomLeftCorner(k, k) = hyx;
  qp.hessian.topRightCorner(k, k) = hyx.transpose();
  const Eigen::MatrixXd sym = 0.5 * (qp.hessian + qp.hessian.transpose());
  qp.hessian = sym;

  qp.gradient = Eigen::VectorXd::Zero(2 * k);
  if (!all_free) {
    const Eigen::VectorXd ax = 2.0 * pxx.cwiseProduct(window.fx) + pxy.cwiseProduct(window.fy);
    const Eigen::VectorXd ay = pxy.cwiseProduct(window.fx) + 2.0 * pyy.cwiseProduct(window.fy);
    qp.gradient.head(k) = b2.transpose() * ax;
    qp.gradient.tail(k) = b2.transpose() * ay;
  }

  // Lateral displacement rows: -r_j <= n_j . (p_j(z) - c_j) <= l_j.
  const auto cx = base.cx();
  const auto cy = base.cy();
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> lower;
  std::vector<double> upper;
  const auto fixed_part = [&](Eigen::Index j) {
    Point2 fixed = Point2::Zero();
    if (!all_free) {
      for (SparseRowMatrix::InnerIterator it(mats.value, j); it; ++it) {
        if (local[it.col()] < 0) {
          fixed += it.value() * Point2(cx[it.col()], cy[it.col()]);
        }
      }
    }
    return fixed;
  };
  const auto add_row = [&](Eigen::Index j, const Point2& dir) {
    const int row = static_cast<int>(lower.size());
    for (SparseRowMatrix::InnerIterator it(b0, j); it; ++it) {
      trips.emplace_back(row, static_cast<int>(it.col()), dir.x() * it.value());
      trips.emplace_back(row, static_cast<int>(it.col() + k), dir.y() * it.value());
    }
    return dir.dot(disc.positions[j] - fixed_part(j));
  };
  for (Eigen::Index j = 0; j < m; ++j) {
    if (b0.row(j).nonZeros() == 0) {
      continue;
    }
    bool touches = false;
    for (SparseRowMatrix::InnerIterator it(b0, j); it; ++it) {
      touches = touches || it.value() != 0.0;
    }
    if (!touches) {
      continue;
    }
    const double centre = add_row(j, disc.normal(static_cast<std::size_t>(j)));
    lower.push_back(-cm.right[j] + centre);
    upper.push_back(cm.left[j] + centre);
    if (lower.back() > upper.back()) {
      throw InfeasibleError(fmt::format("empty lateral interval at sample {}", j));
    }
    out.rows.push_back(static_cast<std::size_t>(j));
  }
  out.num_lateral_rows = static_cast<Eigen::Index>(out.rows.size());
  if (std::isnan(options.slide_limit)) {
    throw ArgumentError("slide limit is NaN");
  }
  if (std::isfinite(options.slide_limit)) {
    const double limit = options.slide_limit > 0.0 ? options.slide_limit : 0.5 * disc.spacing;
    for (std::size_t j : out.rows) {
      const Point2 n = disc.normal(j);
      const double centre = add_row(static_cast<Eigen::Index>(j), Point2(n.y(), -n.x()));
      lower.push_back(centre - limit);
      upper.push_back(centre + limit);
    }
  }
  const auto rows = static_cast<Eigen::Index>(lower.size());
  qp.constraints.resize(rows, 2 * k);
  qp.constraints.setFromTriplets(trips.begin(), trips.end());
  qp.constraints.makeCompressed();
  qp.lower = Eigen::Map<const Eigen::VectorXd>(lower.data(), rows);
  qp.upper = Eigen::Map<const Eigen::VectorXd>(upper.data(), rows);

  out.z_base.resize(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.z_base[i] = cx[window.free_indices[i]];
    out.z_base[i + k] = cy[window.free_indices[i]];
  }
  return out;
}

MinCurvatureProblem assemble_qp(const CenterlineModel& cm, const AssemblyOptions& options) {
  return assemble_qp(cm, cm.spline, full_window(cm.spline, cm.disc.params), options);
}

SplineTrajectory apply_solution(const SplineTrajectory& base, const std::vector<int>& free_indices,
                                const Eigen::VectorXd& z) {
  const auto k = static_cast<Eigen::Index>(free_indices.size());
  if (z.size() != 2 * k) {
    throw ArgumentError("solution size does not match the free control points");
  }
  std::vector<double> cx(base.cx().begin(), base.cx().end());
  std::vector<double> cy(base.cy().begin(), base.cy().end());
  for (Eigen::Index i = 0; i < k; ++i) {
    cx[free_indices[i]] = z[i];
    cy[free_indices[i]] = z[i + k];
  }
  return base.with_coefficients(std::move(cx), std::move(cy));
}

double sum_squared_curvature(const SplineTrajectory& s, double spacing) {
  const auto disc = discretize_by_arclength(s, spacing);
  double sum = 0.0;
  for (double k : disc.curvatures) {
    sum += k * k;
  }
  return sum;
}

OptimizeResult optimize_window(const CenterlineModel& cm, const SplineTrajectory& base,
                               const std::vector<int>& free_indices, const OptimizerConfig& cfg) {
  if (cfg.iterations < 1 || cfg.iterations > 5) {
    throw ArgumentError(fmt::format("iterations must lie in [1, 5], got {}", cfg.iterations));
  }
  QpSettings settings;
  settings.kkt_tol = cfg.kkt_tol;
  settings.regularization = cfg.regularization;

  OptimizeResult result{base, {}, {}, 0, 0};
  IterationRecord baseline;
  baseline.sum_k2 = sum_squared_curvature(base, cm.disc.spacing);
  baseline.accepted = true;
  result.log.push_back(baseline);
  double accepted_k2 = baseline.sum_k2;

  for (int it = 1; it <= cfg.iterations; ++it) {
    const auto window = make_window(result.spline, cm.disc.params, free_indices);
    const auto problem =
        assemble_qp(cm, result.spline, window, {cfg.sample_weights, cfg.slide_limit});
    auto sol = solve_qp(problem.qp, problem.z_base, settings);
    if (sol.status == QpStatus::infeasible) {
      throw NumericalError("minimum-curvature QP reported infeasible");
    }
    auto candidate = apply_solution(result.spline, problem.free_indices, sol.z);
    IterationRecord rec;
    rec.iteration = it;
    rec.objective = sol.objective;
    rec.status = sol.status;
    rec.solve_time = sol.solve_time;
    rec.sum_k2 = sum_squared_curvature(candidate, cm.disc.spacing);
    // The first solve is the method itself; later re-linearisations must not
    // increase the sampled curvature.
    rec.accepted = it == 1 || rec.sum_k2 <= accepted_k2;
    result.log.push_back(rec);
    if (!rec.accepted) {
      break;
    }
    accepted_k2 = rec.sum_k2;
    result.spline = std::move(candidate);
    result.solution = std::move(sol);
    result.num_vars = problem.qp.num_vars();
    result.num_rows = problem.qp.num_rows();
  }
  return result;
}

OptimizeResult optimize(const CenterlineModel& cm, const OptimizerConfig& cfg) {
  std::vector<int> free = cfg.window;
  if (free.empty()) {
    free.resize(static_cast<std::size_t>(cm.spline.num_ctrl()));
    for (int i = 0; i < cm.spline.num_ctrl(); ++i) {
      free[i] = i;
    }
  }
  return optimize_window(cm, cm.spline, free, cfg);
}

BoundaryCheck check_boundaries(const CenterlineModel& cm, const SplineTrajectory& s, double tol) {
  BoundaryCheck out;
  const auto& disc = cm.disc;
  out.offsets.resize(disc.size());
  for (std::size_t j = 0; j < disc.size(); ++j) {
    const double off = disc.normal(j).dot(evaluate(s, disc.params[j]) - disc.positions[j]);
    out.offsets[j] = off;
    const double excess = std::max(off - cm.left[j], -cm.right[j] - off);
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > tol) {
      out.violations.push_back(j);
    }
  }
  return out;
}

}  // namespace raceline
