#include "raceline/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "raceline/error.hpp"

namespace raceline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEqualityGap = 1e-12;
constexpr double kKktShift = 1e-14;
constexpr double kInnerTol = 1e-10;
constexpr double kGapTol = 1e-2;  // mu is held to kInnerTol * kGapTol
constexpr int kStallIterations = 5;
constexpr double kDivergence = 1e12;
constexpr double kStepFraction = 0.995;
constexpr double kPolishDelta = 1e-9;
constexpr int kRefineSteps = 25;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Stacked constraint system A z in [l, u]: problem rows followed by variable bounds.
struct Stacked {
  SparseRowMatrix a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  Eigen::Index num_problem_rows = 0;
};

Stacked stack_constraints(const QpProblem& qp) {
  const Eigen::Index n = qp.num_vars();
  const Eigen::Index m = qp.num_rows();
  const bool has_box = qp.var_lower.has_value() || qp.var_upper.has_value();
  const Eigen::Index total = m + (has_box ? n : 0);
  Stacked s;
  s.num_problem_rows = m;
  s.a.resize(total, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(qp.constraints.nonZeros() + (has_box ? n : 0)));
  for (Eigen::Index r = 0; r < m; ++r) {
    for (SparseRowMatrix::InnerIterator it(qp.constraints, r); it; ++it) {
      trips.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
    }
  }
  s.l.resize(total);
  s.u.resize(total);
  s.l.head(m) = qp.lower;
  s.u.head(m) = qp.upper;
  if (has_box) {
    for (Eigen::Index j = 0; j < n; ++j) {
      trips.emplace_back(static_cast<int>(m + j), static_cast<int>(j), 1.0);
    }
    s.l.tail(n) = qp.var_lower ? *qp.var_lower : Eigen::VectorXd::Constant(n, -kInf);
    s.u.tail(n) = qp.var_upper ? *qp.var_upper : Eigen::VectorXd::Constant(n, kInf);
  }
  s.a.setFromTriplets(trips.begin(), trips.end());
  s.a.makeCompressed();
  return s;
}

void validate(const QpProblem& qp, const Eigen::VectorXd& z0) {
  const Eigen::Index n = qp.num_vars();
  if (qp.hessian.rows() != n || qp.hessian.cols() != n) {
    throw ArgumentError("hessian dimensions do not match the gradient");
  }
  if (qp.constraints.cols() != n && qp.constraints.rows() > 0) {
    throw ArgumentError("constraint matrix column count does not match the variables");
  }
  if (qp.lower.size() != qp.num_rows() || qp.upper.size() != qp.num_rows()) {
    throw ArgumentError("constraint bounds do not match the constraint rows");
  }
  if ((qp.var_lower && qp.var_lower->size() != n) || (qp.var_upper && qp.var_upper->size() != n)) {
    throw ArgumentError("variable bounds do not match the variables");
  }
  if (z0.size() != n) {
    throw ArgumentError("warm start does not match the variables");
  }
}

// Problem rows and variable bounds stacked, split into two-sided inequalities
// and equalities, with the cost scaled to unit magnitude.
class InteriorPoint {
 public:
  InteriorPoint(const QpProblem& qp, const Eigen::VectorXd& z0, const QpSettings& settings)
      : settings_(settings) {
    Stacked st = stack_constraints(qp);
    num_problem_rows_ = st.num_problem_rows;
    h_ = qp.hessian;
    g_ = qp.gradient;
    const Eigen::Index n = h_.rows();
    const double tr = h_.trace();
    // Proximal shift centred on the start point, so flat directions stay put.
    if (tr > 0.0 && n > 0) {
      const double reg = settings.regularization * tr / static_cast<double>(n);
      h_.diagonal().array() += reg;
      g_ -= reg * z0;
    }
    const double size = std::max(n > 0 ? h_.cwiseAbs().maxCoeff() : 0.0, inf_norm(g_));
    cost_ = size > 0.0 ? 1.0 / size : 1.0;
    h_ *= cost_;
    g_ *= cost_;

    std::vector<Eigen::Triplet<double>> ineq;
    std::vector<Eigen::Triplet<double>> eq;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> rhs;
    for (Eigen::Index r = 0; r < st.a.rows(); ++r) {
      const double l = st.l[r];
      const double u = st.u[r];
      if (l == -kInf && u == kInf) {
        row_map_.push_back({Kind::free, 0});
        continue;
      }
      const bool equality = u - l <= kEqualityGap * std::max(1.0, std::abs(u));
      auto& trips = equality ? eq : ineq;
      const auto index = static_cast<Eigen::Index>(equality ? rhs.size() : lo.size());
      for (SparseRowMatrix::InnerIterator it(st.a, r); it; ++it) {
        trips.emplace_back(static_cast<int>(index), static_cast<int>(it.col()), it.value());
      }
      if (equality) {
        rhs.push_back(0.5 * (l + u));
        row_map_.push_back({Kind::equality, index});
      } else {
        lo.push_back(l);
        hi.push_back(u);
        row_map_.push_back({Kind::inequality, index});
      }
    }
    c_.resize(static_cast<Eigen::Index>(lo.size()), n);
    c_.setFromTriplets(ineq.begin(), ineq.end());
    c_.makeCompressed();
    e_.resize(static_cast<Eigen::Index>(rhs.size()), n);
    e_.setFromTriplets(eq.begin(), eq.end());
    e_.makeCompressed();
    l_ = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    u_ = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    b_ = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    has_l_ = l_.array().isFinite().cast<double>();
    has_u_ = u_.array().isFinite().cast<double>();
    num_sides_ = has_l_.sum() + has_u_.sum();
    lf_ = l_.array().isFinite().select(l_, 0.0);
    uf_ = u_.array().isFinite().select(u_, 0.0);
  }

  struct Point {
    Eigen::VectorXd z;
    Eigen::VectorXd sl, su, ll, lu;  // slacks and duals per side (unused sides hold 1 / 0)
    Eigen::VectorXd y;               // equality multipliers
  };

  struct Residuals {
    Eigen::VectorXd dual;
    Eigen::VectorXd pl, pu, pe;
    double mu = 0.0;
  };

  Point start(const Eigen::VectorXd& z0) const {
    Point p;
    p.z = z0;
    const Eigen::VectorXd cz = c_ * z0;
    const Eigen::Index m = c_.rows();
    p.sl = Eigen::VectorXd::Ones(m);
    p.su = Eigen::VectorXd::Ones(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (has_l_[i] != 0.0) p.sl[i] = std::max(cz[i] - l_[i], 1.0);
      if (has_u_[i] != 0.0) p.su[i] = std::max(u_[i] - cz[i], 1.0);
    }
    p.ll = has_l_;
    p.lu = has_u_;
    p.y = Eigen::VectorXd::Zero(e_.rows());
    return p;
  }

  Residuals residuals(const Point& p) const {
    Residuals r;
    const Eigen::VectorXd cz = c_ * p.z;
    r.dual = h_ * p.z + g_ - c_.transpose() * (p.ll - p.lu);
    if (e_.rows() > 0) {
      r.dual -= e_.transpose() * p.y;
    }
    r.pl = has_l_.cwiseProduct(cz - p.sl - lf_);
    r.pu = has_u_.cwiseProduct(uf_ - cz - p.su);
    r.pe = e_ * p.z - b_;
    const double gap = p.sl.cwiseProduct(p.ll).sum() + p.su.cwiseProduct(p.lu).sum();
    r.mu = num_sides_ > 0 ? gap / num_sides_ : 0.0;
    return r;
  }

  // One Newton system for a given complementarity target.
  struct Direction {
    Eigen::VectorXd z, sl, su, ll, lu, y;
  };

  bool factor(const Point& p) {
    const Eigen::VectorXd w = has_l_.cwiseProduct(p.ll.cwiseQuotient(p.sl)) +
                              has_u_.cwiseProduct(p.lu.cwiseQuotient(p.su));
    Eigen::MatrixXd k = h_;
    for (Eigen::Index r = 0; r < c_.rows(); ++r) {
      for (SparseRowMatrix::InnerIterator i1(c_, r); i1; ++i1) {
        const double a = w[r] * i1.value();
        for (SparseRowMatrix::InnerIterator i2(c_, r); i2; ++i2) {
          k(i1.col(), i2.col()) += a * i2.value();
        }
      }
    }
    const double shift = kKktShift * std::max(1.0, k.diagonal().cwiseAbs().maxCoeff());
    k.diagonal().array() += shift;
    if (e_.rows() == 0) {
      llt_.compute(k);
      use_lu_ = false;
      return llt_.info() == Eigen::Success;
    }
    const Eigen::Index n = k.rows();
    const Eigen::Index q = e_.rows();
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n + q, n + q);
    full.topLeftCorner(n, n) = k;
    full.bottomLeftCorner(q, n) = Eigen::MatrixXd(e_);
    full.topRightCorner(n, q) = Eigen::MatrixXd(e_.transpose());
    full.bottomRightCorner(q, q).diagonal().array() = -shift;
    lu_.compute(full);
    use_lu_ = true;
    return true;
  }

  Direction solve(const Point& p, const Residuals& r, const Eigen::VectorXd& cl,
                  const Eigen::VectorXd& cu) const {
    // cl = sl .* ll - target, cu likewise.
    const Eigen::VectorXd tl = has_l_.cwiseProduct((cl + p.ll.cwiseProduct(r.pl)).cwiseQuotient(p.sl));
    const Eigen::VectorXd tu = has_u_.cwiseProduct((cu + p.lu.cwiseProduct(r.pu)).cwiseQuotient(p.su));
    const Eigen::VectorXd rhs = -r.dual + c_.transpose() * (tu - tl);
    Direction d;
    if (!use_lu_) {
      d.z = llt_.solve(rhs);
      d.y = Eigen::VectorXd::Zero(0);
    } else {
      const Eigen::Index n = rhs.size();
      Eigen::VectorXd full(n + e_.rows());
      full.head(n) = rhs;
      full.tail(e_.rows()) = -r.pe;
      const Eigen::VectorXd sol = lu_.solve(full);
      d.z = sol.head(n);
      d.y = -sol.tail(e_.rows());
    }
    const Eigen::VectorXd cdz = c_ * d.z;
    d.sl = has_l_.cwiseProduct(cdz + r.pl);
    d.su = has_u_.cwiseProduct(-cdz + r.pu);
    d.ll = -has_l_.cwiseProduct((cl + p.ll.cwiseProduct(d.sl)).cwiseQuotient(p.sl));
    d.lu = -has_u_.cwiseProduct((cu + p.lu.cwiseProduct(d.su)).cwiseQuotient(p.su));
    return d;
  }

  double max_step(const Point& p, const Direction& d) const {
    double alpha = 1.0;
    const auto limit = [&alpha](const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                                const Eigen::VectorXd& mask) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (mask[i] != 0.0 && dv[i] < 0.0) {
          alpha = std::min(alpha, -v[i] / dv[i]);
        }
      }
    };
    limit(p.sl, d.sl, has_l_);
    limit(p.su, d.su, has_u_);
    limit(p.ll, d.ll, has_l_);
    limit(p.lu, d.lu, has_u_);
    return alpha;
  }

  static void advance(Point& p, const Direction& d, double alpha) {
    p.z += alpha * d.z;
    p.sl += alpha * d.sl;
    p.su += alpha * d.su;
    p.ll += alpha * d.ll;
    p.lu += alpha * d.lu;
    if (d.y.size() == p.y.size()) {
      p.y += alpha * d.y;
    }
  }

  Eigen::Index num_sides() const { return static_cast<Eigen::Index>(num_sides_); }
  double dual_scale(const Point& p) const {
    return 1.0 + std::max({inf_norm(h_ * p.z), inf_norm(g_),
                           inf_norm(c_.transpose() * (p.ll - p.lu))});
  }
  double primal_scale() const { return 1.0 + std::max({inf_norm(lf_), inf_norm(uf_), inf_norm(b_)}); }
  double dual_size(const Point& p) const {
    return std::max({inf_norm(p.ll), inf_norm(p.lu), inf_norm(p.y)});
  }

  // Stacked public multipliers (positive on an upper bound) in unscaled units.
  Eigen::VectorXd stacked_multipliers(const Point& p) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(row_map_.size()));
    for (std::size_t r = 0; r < row_map_.size(); ++r) {
      const auto [kind, i] = row_map_[r];
      if (kind == Kind::inequality) {
        y[static_cast<Eigen::Index>(r)] = (p.lu[i] - p.ll[i]) / cost_;
      } else if (kind == Kind::equality) {
        y[static_cast<Eigen::Index>(r)] = -p.y[i] / cost_;
      }
    }
    return y;
  }

  // Equality-constrained re-solve on the active set of an interior point.
  bool polish(const Point& p, Eigen::VectorXd& z_out, Eigen::VectorXd& y_out) const {
    const Eigen::Index n = h_.rows();
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> bounds;
    std::vector<std::pair<std::size_t, double>> owner;  // stacked row, sign
    for (std::size_t r = 0; r < row_map_.size(); ++r) {
      const auto [kind, i] = row_map_[r];
      double bound = 0.0;
      double sign = 0.0;
      const SparseRowMatrix* src = nullptr;
      if (kind == Kind::equality) {
        src = &e_;
        bound = b_[i];
        sign = -1.0;
      } else if (kind == Kind::inequality) {
        src = &c_;
        if (has_l_[i] != 0.0 && p.ll[i] > p.sl[i]) {
          bound = l_[i];
          sign = -1.0;
        } else if (has_u_[i] != 0.0 && p.lu[i] > p.su[i]) {
          bound = u_[i];
          sign = 1.0;
        }
      }
      if (src == nullptr || sign == 0.0) {
        continue;
      }
      const auto row = static_cast<int>(bounds.size());
      for (SparseRowMatrix::InnerIterator it(*src, i); it; ++it) {
        trips.emplace_back(row, static_cast<int>(it.col()), it.value());
      }
      bounds.push_back(bound);
      owner.emplace_back(r, sign);
    }
    const auto k = static_cast<Eigen::Index>(bounds.size());
    SparseRowMatrix act(k, n);
    act.setFromTriplets(trips.begin(), trips.end());
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(bounds.data(), k);
    // Regularised KKT [H A'; A 0] with iterative refinement.
    const double delta = kPolishDelta;
    Eigen::MatrixXd schur = h_;
    schur.diagonal().array() += delta;
    schur += Eigen::MatrixXd(act.transpose() * act) / delta;
    Eigen::LDLT<Eigen::MatrixXd> fac(schur);
    if (fac.info() != Eigen::Success) {
      return false;
    }
    const Eigen::VectorXd rhs1 = -g_ + delta * p.z;
    const auto solve_reg = [&](const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                               Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
      dx = fac.solve(r1 + act.transpose() * r2 / delta);
      dy = (act * dx - r2) / delta;
    };
    Eigen::VectorXd x;
    Eigen::VectorXd ya;
    solve_reg(rhs1, b, x, ya);
    for (int it = 0; it < kRefineSteps; ++it) {
      const Eigen::VectorXd r1 = rhs1 - h_ * x - delta * x - act.transpose() * ya;
      const Eigen::VectorXd r2 = b - act * x;
      if (std::max(inf_norm(r1), inf_norm(r2)) < 1e-15) {
        break;
      }
      Eigen::VectorXd dx;
      Eigen::VectorXd dy;
      solve_reg(r1, r2, dx, dy);
      x += dx;
      ya += dy;
    }
    if (!x.allFinite() || !ya.allFinite()) {
      return false;
    }
    z_out = x;
    y_out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(row_map_.size()));
    for (Eigen::Index r = 0; r < k; ++r) {
      y_out[static_cast<Eigen::Index>(owner[r].first)] = ya[r] / cost_;
    }
    return true;
  }

 private:
  enum class Kind { free, inequality, equality };

  QpSettings settings_;
  Eigen::MatrixXd h_;
  Eigen::VectorXd g_;
  double cost_ = 1.0;
  SparseRowMatrix c_;
  SparseRowMatrix e_;
  Eigen::VectorXd l_, u_, b_;
  Eigen::VectorXd lf_, uf_;  // bounds with infinities zeroed
  Eigen::VectorXd has_l_, has_u_;
  double num_sides_ = 0.0;
  Eigen::Index num_problem_rows_ = 0;
  std::vector<std::pair<Kind, Eigen::Index>> row_map_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool use_lu_ = false;
};

struct Candidate {
  Eigen::VectorXd z;
  Eigen::VectorXd y;  // stacked multipliers
  KktResiduals res;
  bool polished = false;
};

KktResiduals stacked_residuals(const QpProblem& qp, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& y_stacked) {
  const Eigen::Index m = qp.num_rows();
  const Eigen::VectorXd y = y_stacked.head(m);
  const Eigen::VectorXd yv = y_stacked.size() > m ? Eigen::VectorXd(y_stacked.tail(qp.num_vars()))
                                                  : Eigen::VectorXd::Zero(qp.num_vars());
  return kkt_residuals(qp, z, y, yv);
}

bool within_tolerance(const QpProblem& qp, const KktResiduals& r, double tol) {
  return r.stationarity <= tol * (1.0 + inf_norm(qp.gradient)) && r.primal <= tol &&
         r.complementarity <= tol;
}

double residual_score(const QpProblem& qp, const KktResiduals& r) {
  return std::max({r.stationarity / (1.0 + inf_norm(qp.gradient)), r.primal, r.complementarity});
}

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(hessian * z) + gradient.dot(z);
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::solved:
      return "solved";
    case QpStatus::max_iterations:
      return "max-iterations";
    case QpStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers,
                           const Eigen::VectorXd& var_multipliers) {
  KktResiduals r;
  Eigen::VectorXd grad = qp.hessian * z + qp.gradient;
  if (qp.num_rows() > 0) {
    grad += qp.constraints.transpose() * multipliers;
  }
  if (var_multipliers.size() == z.size()) {
    grad += var_multipliers;
  }
  r.stationarity = inf_norm(grad);

  const auto check_row = [&r](double value, double lo, double hi, double y) {
    r.primal = std::max({r.primal, lo - value, value - hi});
    if (y > 0.0) {
      r.complementarity =
          std::max(r.complementarity, hi == kInf ? kInf : y * std::abs(hi - value));
    } else if (y < 0.0) {
      r.complementarity =
          std::max(r.complementarity, lo == -kInf ? kInf : -y * std::abs(value - lo));
    }
  };
  if (qp.num_rows() > 0) {
    const Eigen::VectorXd cz = qp.constraints * z;
    for (Eigen::Index i = 0; i < cz.size(); ++i) {
      check_row(cz[i], qp.lower[i], qp.upper[i], multipliers[i]);
    }
  }
  if (qp.var_lower || qp.var_upper) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double lo = qp.var_lower ? (*qp.var_lower)[j] : -kInf;
      const double hi = qp.var_upper ? (*qp.var_upper)[j] : kInf;
      check_row(z[j], lo, hi, var_multipliers.size() == z.size() ? var_multipliers[j] : 0.0);
    }
  }
  r.primal = std::max(r.primal, 0.0);
  return r;
}

QpSolution solve_qp(const QpProblem& qp, const Eigen::VectorXd& z0, const QpSettings& settings) {
  const auto started = std::chrono::steady_clock::now();
  validate(qp, z0);
  QpSolution sol;
  const auto finish = [&](QpSolution& s) {
    s.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return s;
  };

  for (Eigen::Index i = 0; i < qp.num_rows(); ++i) {
    if (qp.lower[i] > qp.upper[i]) {
      sol.z = z0;
      sol.status = QpStatus::infeasible;
      sol.objective = qp.objective(z0);
      return finish(sol);
    }
  }

  InteriorPoint ipm(qp, z0, settings);
  InteriorPoint::Point pt = ipm.start(z0);

  Candidate best;
  double best_score = kInf;
  const auto consider = [&](Eigen::VectorXd z, Eigen::VectorXd y, bool polished) {
    Candidate c{std::move(z), std::move(y), {}, polished};
    c.res = stacked_residuals(qp, c.z, c.y);
    const double score = residual_score(qp, c.res);
    if (score < best_score) {
      best_score = score;
      best = std::move(c);
    }
  };

  bool infeasible = false;
  int iter = 0;
  InteriorPoint::Point best_pt = pt;
  double best_merit = kInf;
  int since_best = 0;
  for (; iter < settings.max_iterations; ++iter) {
    const auto r = ipm.residuals(pt);
    const double prim = std::max({inf_norm(r.pl), inf_norm(r.pu), inf_norm(r.pe)});
    const double merit = std::max(
        {inf_norm(r.dual) / ipm.dual_scale(pt), prim / ipm.primal_scale(), r.mu / kGapTol});
    if (merit < best_merit) {
      best_merit = merit;
      best_pt = pt;
      since_best = 0;
    } else if (++since_best >= kStallIterations) {
      break;
    }
    if (merit <= kInnerTol) {
      break;
    }
    if (ipm.dual_size(pt) > kDivergence && prim > settings.kkt_tol) {
      infeasible = true;
      break;
    }
    if (!ipm.factor(pt)) {
      break;
    }
    const Eigen::VectorXd zero_l = pt.sl.cwiseProduct(pt.ll);
    const Eigen::VectorXd zero_u = pt.su.cwiseProduct(pt.lu);
    const auto aff = ipm.solve(pt, r, zero_l, zero_u);
    const double a_aff = ipm.max_step(pt, aff);
    double mu_aff = 0.0;
    if (ipm.num_sides() > 0) {
      mu_aff = ((pt.sl + a_aff * aff.sl).cwiseProduct(pt.ll + a_aff * aff.ll).sum() +
                (pt.su + a_aff * aff.su).cwiseProduct(pt.lu + a_aff * aff.lu).sum()) /
               static_cast<double>(ipm.num_sides());
    }
    const double sigma = r.mu > 0.0 ? std::pow(mu_aff / r.mu, 3) : 0.0;
    const Eigen::VectorXd cl =
        zero_l + aff.sl.cwiseProduct(aff.ll) - Eigen::VectorXd::Constant(zero_l.size(), sigma * r.mu);
    const Eigen::VectorXd cu =
        zero_u + aff.su.cwiseProduct(aff.lu) - Eigen::VectorXd::Constant(zero_u.size(), sigma * r.mu);
    const auto dir = ipm.solve(pt, r, cl, cu);
    const double alpha = std::min(1.0, kStepFraction * ipm.max_step(pt, dir));
    InteriorPoint::advance(pt, dir, alpha);
  }
  sol.iterations = iter;
  pt = std::move(best_pt);
  consider(pt.z, ipm.stacked_multipliers(pt), false);
  if (settings.polish && !infeasible) {
    Eigen::VectorXd z;
    Eigen::VectorXd y;
    if (ipm.polish(pt, z, y)) {
      consider(std::move(z), std::move(y), true);
    }
  }

  const Eigen::Index m = qp.num_rows();
  sol.z = best.z;
  sol.multipliers = best.y.head(m);
  sol.var_multipliers = best.y.size() > m ? Eigen::VectorXd(best.y.tail(qp.num_vars()))
                                          : Eigen::VectorXd::Zero(qp.num_vars());
  sol.objective = qp.objective(sol.z);
  sol.kkt_stationarity = best.res.stationarity;
  sol.kkt_primal = best.res.primal;
  sol.kkt_complementarity = best.res.complementarity;
  sol.polished = best.polished;
  if (within_tolerance(qp, best.res, settings.kkt_tol)) {
    sol.status = QpStatus::solved;
  } else if (infeasible) {
    sol.status = QpStatus::infeasible;
  } else {
    sol.status = QpStatus::max_iterations;
  }
  return finish(sol);
}

}  // namespace raceline
