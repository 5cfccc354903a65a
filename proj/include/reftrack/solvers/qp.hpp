#pragma once

#include <Eigen/Dense>
#include <string>

namespace reftrack {

/// minimize ½ xᵀP x + qᵀx  s.t.  A x ≤ b,  with P symmetric positive semidefinite.
struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  void validate() const;
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
  double max_violation(const Eigen::VectorXd& x) const;
};

enum class QpStatus { Optimal, MaxIterations, NumericalFailure };

std::string to_string(QpStatus s);

struct QpSolution {
  QpStatus status = QpStatus::MaxIterations;
  Eigen::VectorXd x;
  Eigen::VectorXd z;  // inequality multipliers
  double objective = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-9;
  int max_iter = 60;
};

/// Mehrotra predictor-corrector primal-dual interior point for small dense QPs.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts = {});

}  // namespace reftrack
