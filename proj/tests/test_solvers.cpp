#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "reftrack/core/types.hpp"
#include "reftrack/solvers/conic.hpp"
#include "reftrack/solvers/lbfgsb.hpp"
#include "reftrack/solvers/qp.hpp"

using namespace reftrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// minimize t s.t. ||p - c|| <= t over (p, t), optional box on p.
ConicProgram distance_program(const Eigen::Vector3d& c, const Eigen::Vector3d* lo, const Eigen::Vector3d* hi) {
  ConicProgram prog(4);
  prog.c(3) = 1.0;
  MatrixXd E = MatrixXd::Zero(3, 4);
  E.leftCols(3).setIdentity();
  VectorXd g = VectorXd::Zero(4);
  g(3) = 1.0;
  prog.add_cone(E, -c, g, 0.0);
  if (lo) {
    for (int i = 0; i < 3; ++i) {
      VectorXd row = VectorXd::Zero(4);
      row(i) = 1.0;
      prog.add_linear(row, (*hi)(i));
      prog.add_linear(-row, -(*lo)(i));
    }
  }
  return prog;
}

// Random bounded program with x = 0 strictly feasible.
ConicProgram random_program(std::mt19937& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  const int n = 2 + static_cast<int>(rng() % 4);
  ConicProgram prog(n);
  for (int i = 0; i < n; ++i) prog.c(i) = N(rng);
  for (int i = 0; i < n; ++i) {
    VectorXd row = VectorXd::Zero(n);
    row(i) = 1.0;
    prog.add_linear(row, 2.0);
    prog.add_linear(-row, 2.0);
  }
  VectorXd row(n);
  for (int i = 0; i < n; ++i) row(i) = N(rng);
  prog.add_linear(row, 0.5 + std::abs(N(rng)));
  const int cones = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < cones; ++k) {
    const int rows = 1 + static_cast<int>(rng() % 3);
    MatrixXd E(rows, n);
    VectorXd f(rows), g(n);
    for (int r = 0; r < rows; ++r) {
      for (int i = 0; i < n; ++i) E(r, i) = N(rng);
      f(r) = 0.5 * N(rng);
    }
    for (int i = 0; i < n; ++i) g(i) = 0.3 * N(rng);
    prog.add_cone(E, f, g, f.norm() + 0.5 + std::abs(N(rng)));
  }
  return prog;
}

// Exact-penalty objective c'x + rho * sum(max(0, violation_i)) minimized by
// normalized subgradient steps with geometrically decaying length.
double penalty_subgradient_oracle(const ConicProgram& prog, double rho, int iterations) {
  const int n = prog.num_vars;
  auto eval = [&](const VectorXd& x, VectorXd& sub) {
    double F = prog.c.dot(x);
    sub = prog.c;
    for (int i = 0; i < prog.num_linear(); ++i) {
      const double v = prog.A_lin.row(i).dot(x) - prog.b_lin(i);
      if (v > 0.0) {
        F += rho * v;
        sub += rho * prog.A_lin.row(i).transpose();
      }
    }
    for (const auto& k : prog.cones) {
      const VectorXd r = k.E * x + k.f;
      const double nr = r.norm();
      const double v = nr - k.g.dot(x) - k.h;
      if (v > 0.0) {
        F += rho * v;
        if (nr > 0.0) sub += rho * (k.E.transpose() * r / nr);
        sub -= rho * k.g;
      }
    }
    return F;
  };
  VectorXd x = VectorXd::Zero(n), sub(n);
  double best = eval(x, sub);
  const double t0 = 1.0, t_end = 1e-11;
  const double q = std::pow(t_end / t0, 1.0 / iterations);
  double t = t0;
  for (int k = 0; k < iterations; ++k) {
    const double F = eval(x, sub);
    best = std::min(best, F);
    const double gn = sub.norm();
    if (gn == 0.0) break;
    x -= t * sub / gn;
    t *= q;
  }
  return best;
}

double rosenbrock(const VectorXd& x, VectorXd& g) {
  const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
  g(0) = -2.0 * a - 400.0 * x(0) * b;
  g(1) = 200.0 * b;
  return a * a + 100.0 * b * b;
}

// Projected gradient descent with Armijo backtracking.
VectorXd projected_gradient_oracle(const Objective& f, const BoxSpec& box, VectorXd x, int iterations) {
  VectorXd g(x.size()), gt(x.size());
  double fx = f(x, g);
  double step = 1.0;
  for (int k = 0; k < iterations; ++k) {
    step = std::min(1.0, step * 2.0);
    while (true) {
      const VectorXd xt = (x - step * g).cwiseMax(box.lower).cwiseMin(box.upper);
      const double ft = f(xt, gt);
      if (ft <= fx - 1e-4 / step * (xt - x).squaredNorm() || step < 1e-20) {
        x = xt;
        fx = ft;
        g = gt;
        break;
      }
      step *= 0.5;
    }
  }
  return x;
}

}  // namespace

TEST(Conic, ZeroDistanceCone) {
  const Eigen::Vector3d c(1.0, -2.0, 0.5);
  const auto sol = solve_conic(distance_program(c, nullptr, nullptr));
  ASSERT_EQ(sol.status, ConicStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-6);
  EXPECT_LT((sol.x.head(3) - c).norm(), 1e-5);
  EXPECT_LE(sol.max_violation, 1e-8);
}

TEST(Conic, BoxProjection) {
  const Eigen::Vector3d c(3.0, -1.0, 0.25), lo(0, 0, 0), hi(1, 1, 1);
  const Eigen::Vector3d proj = c.cwiseMax(lo).cwiseMin(hi);
  const auto sol = solve_conic(distance_program(c, &lo, &hi));
  ASSERT_EQ(sol.status, ConicStatus::Optimal);
  EXPECT_NEAR(sol.objective, (c - proj).norm(), 1e-6);
  EXPECT_LE(sol.max_violation, 1e-8);
  // The minimizer is only pinned to sqrt(gap); tighten the gap to check it.
  ConicOptions tight;
  tight.rel_gap = 1e-12;
  tight.abs_gap = 1e-12;
  const auto fine = solve_conic(distance_program(c, &lo, &hi), tight);
  ASSERT_EQ(fine.status, ConicStatus::Optimal);
  EXPECT_LT((fine.x.head(3) - proj).norm(), 1e-5);
}

TEST(Conic, LinearProgram) {
  // maximize x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2).
  ConicProgram prog(2);
  prog.c << -1.0, -1.0;
  prog.add_linear(Eigen::Vector2d(1, 2), 4);
  prog.add_linear(Eigen::Vector2d(3, 1), 6);
  prog.add_linear(Eigen::Vector2d(-1, 0), 0);
  prog.add_linear(Eigen::Vector2d(0, -1), 0);
  const auto sol = solve_conic(prog);
  ASSERT_EQ(sol.status, ConicStatus::Optimal);
  EXPECT_NEAR(sol.x(0), 1.6, 1e-6);
  EXPECT_NEAR(sol.x(1), 1.2, 1e-6);
}

TEST(Conic, DetectsInfeasibility) {
  // ||x|| <= 1 and x0 >= 2.
  ConicProgram prog(2);
  prog.c << 1.0, 0.0;
  prog.add_cone(MatrixXd::Identity(2, 2), VectorXd::Zero(2), VectorXd::Zero(2), 1.0);
  prog.add_linear(Eigen::Vector2d(-1, 0), -2.0);
  EXPECT_EQ(solve_conic(prog).status, ConicStatus::Infeasible);
}

TEST(Conic, DetectsUnbounded) {
  ConicProgram prog(2);
  prog.c << -1.0, 0.0;
  prog.add_linear(Eigen::Vector2d(0, 1), 1.0);
  prog.add_linear(Eigen::Vector2d(0, -1), 1.0);
  EXPECT_EQ(solve_conic(prog).status, ConicStatus::Unbounded);
}

TEST(Conic, RejectsDimensionMismatch) {
  ConicProgram prog(2);
  prog.add_cone(MatrixXd::Identity(3, 3), VectorXd::Zero(3), VectorXd::Zero(3), 1.0);
  EXPECT_THROW(solve_conic(prog), InvalidArgument);
  EXPECT_THROW(ConicProgram(2).add_linear(VectorXd::Zero(3), 1.0), InvalidArgument);
}

TEST(Conic, RandomProgramsMatchPenaltyOracle) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const ConicProgram prog = random_program(rng);
    const auto sol = solve_conic(prog);
    ASSERT_EQ(sol.status, ConicStatus::Optimal) << "trial " << trial;
    EXPECT_LE(sol.max_violation, 1e-8);
    const double oracle = penalty_subgradient_oracle(prog, 100.0, 1000000);
    EXPECT_NEAR(sol.objective, oracle, 1e-4) << "trial " << trial;
  }
}

TEST(Conic, DeterministicAndDumpable) {
  std::mt19937 rng(5);
  const ConicProgram prog = random_program(rng);
  const auto a = solve_conic(prog), b = solve_conic(prog);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
  std::ostringstream os;
  write_conic_program(os, prog);
  EXPECT_EQ(os.str().rfind("n " + std::to_string(prog.num_vars) + "\n", 0), 0u);
  EXPECT_NE(os.str().find("cones " + std::to_string(prog.cones.size())), std::string::npos);
}

TEST(Lbfgsb, UnconstrainedQuadratic) {
  const VectorXd target = (VectorXd(5) << 1, -2, 3, 0.5, -0.25).finished();
  Objective f = [&](const VectorXd& x, VectorXd& g) {
    g = 2.0 * (x - target);
    return (x - target).squaredNorm();
  };
  const auto r = minimize_box(f, BoxSpec::unbounded(5), VectorXd::Zero(5));
  EXPECT_EQ(r.status, LbfgsbStatus::ConvergedGrad);
  EXPECT_LT((r.x - target).lpNorm<Eigen::Infinity>(), 1e-5);
}

TEST(Lbfgsb, ActiveBounds) {
  Objective f = [](const VectorXd& x, VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  BoxSpec box{VectorXd::Constant(4, 1.0), VectorXd::Constant(4, 2.0)};
  const auto r = minimize_box(f, box, VectorXd::Constant(4, 1.7));
  EXPECT_EQ(r.status, LbfgsbStatus::ConvergedGrad);
  EXPECT_LT((r.x - VectorXd::Ones(4)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Lbfgsb, RosenbrockMatchesProjectedGradientOracle) {
  BoxSpec box{VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0)};
  const VectorXd x0 = (VectorXd(2) << -1.2, 1.0).finished();
  LbfgsbOptions opts;
  opts.grad_tol = 1e-8;
  const auto r = minimize_box(rosenbrock, box, x0, opts);
  EXPECT_LT((r.x - VectorXd::Ones(2)).norm(), 1e-4);
  const VectorXd oracle = projected_gradient_oracle(rosenbrock, box, x0, 1000000);
  EXPECT_LT((oracle - VectorXd::Ones(2)).norm(), 1e-6);
  EXPECT_LT((r.x - oracle).norm(), 1e-4);
}

TEST(Lbfgsb, ConstrainedRosenbrockMatchesOracle) {
  BoxSpec box{VectorXd::Constant(2, -5.0), (VectorXd(2) << 0.5, 5.0).finished()};
  const VectorXd x0 = (VectorXd(2) << -1.2, 1.0).finished();
  LbfgsbOptions opts;
  opts.grad_tol = 1e-9;
  const auto r = minimize_box(rosenbrock, box, x0, opts);
  const VectorXd oracle = projected_gradient_oracle(rosenbrock, box, x0, 1000000);
  EXPECT_DOUBLE_EQ(r.x(0), 0.5);
  EXPECT_LT((r.x - oracle).norm(), 1e-6);
}

TEST(Lbfgsb, MonotoneOnRandomStartsAndDeterministic) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  BoxSpec box{VectorXd::Constant(2, -4.0), VectorXd::Constant(2, 4.0)};
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd x0 = (VectorXd(2) << u(rng), u(rng)).finished();
    VectorXd g(2);
    const double f0 = rosenbrock(x0, g);
    for (int max_iter : {1, 3, 200}) {
      LbfgsbOptions opts;
      opts.max_iter = max_iter;
      const auto a = minimize_box(rosenbrock, box, x0, opts);
      const auto b = minimize_box(rosenbrock, box, x0, opts);
      EXPECT_LE(a.f, f0);
      EXPECT_TRUE((a.x.array() >= box.lower.array()).all() && (a.x.array() <= box.upper.array()).all());
      EXPECT_EQ(a.x, b.x);
      EXPECT_EQ(a.evaluations, b.evaluations);
    }
  }
}

TEST(Lbfgsb, CallbackFailureKeepsLastIterate) {
  int calls = 0;
  Objective f = [&](const VectorXd& x, VectorXd& g) {
    if (++calls > 5) throw std::runtime_error("boom");
    return rosenbrock(x, g);
  };
  BoxSpec box = BoxSpec::unbounded(2);
  const VectorXd x0 = (VectorXd(2) << -1.2, 1.0).finished();
  const auto r = minimize_box(f, box, x0);
  EXPECT_EQ(r.status, LbfgsbStatus::CallbackFailed);
  VectorXd g(2);
  EXPECT_LE(rosenbrock(r.x, g), rosenbrock(x0, g));
  EXPECT_DOUBLE_EQ(r.f, rosenbrock(r.x, g));
}

TEST(Lbfgsb, RejectsBadInput) {
  Objective f = [](const VectorXd& x, VectorXd& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  BoxSpec box{VectorXd::Constant(2, 1.0), VectorXd::Constant(2, 0.0)};
  EXPECT_THROW(minimize_box(f, box, VectorXd::Zero(2)), InvalidArgument);
  BoxSpec ok{VectorXd::Zero(2), VectorXd::Ones(2)};
  EXPECT_THROW(minimize_box(f, ok, VectorXd::Constant(2, 3.0)), InvalidArgument);
}

TEST(Qp, RandomProgramsSatisfyKkt) {
  std::mt19937 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 5, m = 2 + trial % 7;
    MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) R(i, j) = N(rng);
    QuadraticProgram qp;
    qp.P = R.transpose() * R + 0.1 * MatrixXd::Identity(n, n);
    qp.q = VectorXd::NullaryExpr(n, [&] { return N(rng); });
    qp.A = MatrixXd::NullaryExpr(m, n, [&] { return N(rng); });
    qp.b = VectorXd::NullaryExpr(m, [&] { return std::abs(N(rng)) - 0.2; }).cwiseMax(0.05);
    const auto sol = solve_qp(qp);
    ASSERT_EQ(sol.status, QpStatus::Optimal);
    const VectorXd& x = sol.x;
    const VectorXd& z = sol.z;
    EXPECT_LT((qp.P * x + qp.q + qp.A.transpose() * z).lpNorm<Eigen::Infinity>(), 1e-7);
    EXPECT_LT(qp.max_violation(x), 1e-7);
    EXPECT_GE(z.minCoeff(), -1e-12);
    EXPECT_LT(std::abs(z.dot(qp.b - qp.A * x)), 1e-7);
  }
}

TEST(Qp, BoxConstrainedClosedForm) {
  QuadraticProgram qp;
  qp.P = MatrixXd::Identity(2, 2);
  qp.q = Eigen::Vector2d(-3.0, 0.5);
  qp.A.resize(4, 2);
  qp.A << 1, 0, -1, 0, 0, 1, 0, -1;
  qp.b = Eigen::Vector4d(1, 1, 1, 1);
  const auto sol = solve_qp(qp);
  ASSERT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-8);
  EXPECT_NEAR(sol.x(1), -0.5, 1e-8);
}
