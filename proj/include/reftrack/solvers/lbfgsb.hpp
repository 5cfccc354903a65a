#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace reftrack {

/// Returns f(x) and writes the gradient into `grad` (already sized).
/// Throwing or returning a non-finite value marks the point as failed.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoxSpec unbounded(int n);
  void validate(int n) const;
};

struct LbfgsbOptions {
  double grad_tol = 1e-5;
  double f_tol = 1e-9;
  int max_iter = 200;
  int memory = 8;
};

enum class LbfgsbStatus { ConvergedGrad, ConvergedF, MaxIterations, LineSearchFailed, CallbackFailed };

std::string to_string(LbfgsbStatus s);

struct LbfgsbResult {
  Eigen::VectorXd x;
  double f = 0.0;
  LbfgsbStatus status = LbfgsbStatus::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
  double projected_grad_norm = 0.0;
};

/// Sup-norm of P(x - g) - x.
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const BoxSpec& box);

/// Limited-memory BFGS with box constraints: generalized Cauchy point,
/// subspace minimization over the free variables, strong-Wolfe line search.
LbfgsbResult minimize_box(const Objective& f, const BoxSpec& bounds, const Eigen::VectorXd& x0,
                          const LbfgsbOptions& opts = {});

}  // namespace reftrack
