#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace raceline {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// min 1/2 z'Hz + g'z  s.t.  lower <= C z <= upper,  var_lower <= z <= var_upper.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  SparseRowMatrix constraints;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::optional<Eigen::VectorXd> var_lower;
  std::optional<Eigen::VectorXd> var_upper;

  Eigen::Index num_vars() const { return gradient.size(); }
  Eigen::Index num_rows() const { return constraints.rows(); }
  double objective(const Eigen::VectorXd& z) const;
};

enum class QpStatus { solved, max_iterations, infeasible };

std::string_view to_string(QpStatus status);

struct QpSettings {
  double kkt_tol = 1e-6;
  /// Diagonal shift, scaled by trace(H) / n, applied as a proximal term around z0.
  double regularization = 1e-10;
  int max_iterations = 100;
  bool polish = true;
};

struct QpSolution {
  Eigen::VectorXd z;
  /// Multipliers of the constraint rows: positive on an active upper bound,
  /// negative on an active lower bound, so H z + g + C' y + y_var = 0.
  Eigen::VectorXd multipliers;
  Eigen::VectorXd var_multipliers;
  double objective = 0.0;
  double kkt_stationarity = 0.0;
  double kkt_primal = 0.0;
  double kkt_complementarity = 0.0;
  QpStatus status = QpStatus::max_iterations;
  int iterations = 0;
  bool polished = false;
  double solve_time = 0.0;
};

/// Convex QP by a primal-dual interior-point method (Mehrotra predictor-corrector)
/// followed by an active-set polish. z0 only centres the regularization and
/// seeds the primal start. Deterministic for identical inputs.
QpSolution solve_qp(const QpProblem& qp, const Eigen::VectorXd& z0,
                    const QpSettings& settings = {});

/// KKT residuals of a candidate primal/dual pair (infinity norms).
struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& multipliers,
                           const Eigen::VectorXd& var_multipliers);

}  // namespace raceline
