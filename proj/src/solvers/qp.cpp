#include "reftrack/solvers/qp.hpp"

#include <algorithm>
#include <cmath>

#include "reftrack/core/types.hpp"

namespace reftrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void QuadraticProgram::validate() const {
  const auto n = q.size();
  if (n == 0) throw InvalidArgument("QP needs at least one variable");
  if (P.rows() != n || P.cols() != n) throw InvalidArgument("QP Hessian dimension mismatch");
  if (A.cols() != n || A.rows() != b.size()) throw InvalidArgument("QP constraint dimension mismatch");
  if (!P.allFinite() || !q.allFinite() || !A.allFinite() || !b.allFinite())
    throw InvalidArgument("QP data must be finite");
}

double QuadraticProgram::max_violation(const VectorXd& x) const {
  return A.rows() > 0 ? std::max(0.0, (A * x - b).maxCoeff()) : 0.0;
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::MaxIterations: return "MaxIterations";
    case QpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

namespace {

// Largest step keeping v + a dv >= 0, capped at `cap`.
double max_step(const VectorXd& v, const VectorXd& dv, double cap) {
  double a = cap;
  for (int i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts) {
  qp.validate();
  const int n = static_cast<int>(qp.q.size());
  const int m = static_cast<int>(qp.b.size());
  const MatrixXd& P = qp.P;
  const MatrixXd& A = qp.A;
  const double reg = 1e-10 * std::max(1.0, P.diagonal().cwiseAbs().maxCoeff());

  QpSolution sol;
  // Start from min ½xᵀPx + qᵀx + ½‖b − Ax‖², then shift s and z into the interior.
  VectorXd x = VectorXd::Zero(n);
  VectorXd s = VectorXd::Ones(m);
  VectorXd z = VectorXd::Ones(m);
  if (m > 0) {
    MatrixXd H0 = P;
    H0.noalias() += A.transpose() * A;
    H0.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt0(H0);
    if (ldlt0.info() == Eigen::Success) {
      const VectorXd x0 = ldlt0.solve(A.transpose() * qp.b - qp.q);
      if (x0.allFinite()) {
        x = x0;
        s = qp.b - A * x;
        z = -s;
        const double ds = -s.minCoeff(), dz = -z.minCoeff();
        s.array() += ds >= 0.0 ? 1.0 + ds : 0.0;
        z.array() += dz >= 0.0 ? 1.0 + dz : 0.0;
      }
    }
  }
  const double qscale = 1.0 + qp.q.lpNorm<Eigen::Infinity>();
  const double bscale = 1.0 + (m > 0 ? qp.b.lpNorm<Eigen::Infinity>() : 0.0);

  MatrixXd H, DA;
  for (int iter = 0;; ++iter) {
    const VectorXd rd = P * x + qp.q + A.transpose() * z;
    const VectorXd rp = A * x + s - qp.b;
    const double mu = m > 0 ? s.dot(z) / m : 0.0;
    sol.x = x;
    sol.z = z;
    sol.objective = qp.objective(x);
    sol.iterations = iter;
    if (rd.lpNorm<Eigen::Infinity>() <= opts.tol * qscale &&
        (m == 0 || rp.lpNorm<Eigen::Infinity>() <= opts.tol * bscale) &&
        mu <= opts.tol * (1.0 + std::abs(sol.objective))) {
      sol.status = QpStatus::Optimal;
      return sol;
    }
    if (iter >= opts.max_iter) {
      sol.status = QpStatus::MaxIterations;
      return sol;
    }

    const VectorXd d = z.cwiseQuotient(s);
    DA = d.asDiagonal() * A;
    H = P;
    H.noalias() += A.transpose() * DA;
    H.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) {
      sol.status = QpStatus::NumericalFailure;
      return sol;
    }
    // rc: complementarity residual s o z - target.
    auto solve = [&](const VectorXd& rc, VectorXd& dx, VectorXd& ds, VectorXd& dz) {
      const VectorXd t = (-rc + z.cwiseProduct(rp)).cwiseQuotient(s);
      dx = ldlt.solve(-rd - A.transpose() * t);
      ds = -rp - A * dx;
      dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
    };

    VectorXd dxa, dsa, dza;
    solve(s.cwiseProduct(z), dxa, dsa, dza);
    const double aa = std::min(max_step(s, dsa, 1.0), max_step(z, dza, 1.0));
    const double mu_aff = m > 0 ? (s + aa * dsa).dot(z + aa * dza) / m : 0.0;
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;

    VectorXd dx, ds, dz;
    solve(s.cwiseProduct(z) + dsa.cwiseProduct(dza) - VectorXd::Constant(m, sigma * mu), dx, ds, dz);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds, 1e30), max_step(z, dz, 1e30)));
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    if (!x.allFinite() || !s.allFinite() || !z.allFinite()) {
      sol.status = QpStatus::NumericalFailure;
      return sol;
    }
  }
}

}  // namespace reftrack
