#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace reftrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// ‖E x + f‖₂ ≤ gᵀx + h
struct ConeConstraint {
  MatrixXd E;
  VectorXd f;
  VectorXd g;
  double h = 0.0;
};

/// minimize cᵀx  s.t.  A_lin x ≤ b_lin,  every cone constraint.
struct ConicProgram {
  int num_vars = 0;
  VectorXd c;
  MatrixXd A_lin;
  VectorXd b_lin;
  std::vector<ConeConstraint> cones;

  explicit ConicProgram(int n = 0);

  void add_linear(const VectorXd& row, double rhs);
  void add_cone(const MatrixXd& E, const VectorXd& f, const VectorXd& g, double h);
  int num_linear() const { return static_cast<int>(A_lin.rows()); }

  /// Throws InvalidArgument on inconsistent dimensions or non-finite data.
  void validate() const;
  /// Largest constraint violation at x (0 when feasible).
  double max_violation(const VectorXd& x) const;
};

enum class ConicStatus { Optimal, Infeasible, Unbounded, MaxIterations };

std::string to_string(ConicStatus s);

struct ConicSolution {
  ConicStatus status = ConicStatus::MaxIterations;
  VectorXd x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
};

struct ConicOptions {
  double feas_tol = 1e-8;
  double rel_gap = 1e-6;
  double abs_gap = 1e-8;
  int max_iter = 100;
};

/// Primal-dual interior point on the homogeneous self-dual embedding with
/// Nesterov-Todd scaling and Mehrotra correction.
ConicSolution solve_conic(const ConicProgram& prog, const ConicOptions& opts = {});

/// Plain-text dump: `n`, objective, linear rows `a.. b`, cones `E|f|g|h` blocks.
void write_conic_program(std::ostream& os, const ConicProgram& prog);

}  // namespace reftrack
