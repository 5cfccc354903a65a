#include "reftrack/solvers/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <Eigen/Sparse>

#include "reftrack/core/types.hpp"

namespace reftrack {

ConicProgram::ConicProgram(int n) : num_vars(n), c(VectorXd::Zero(n)), A_lin(0, n), b_lin(0) {}

void ConicProgram::add_linear(const VectorXd& row, double rhs) {
  if (row.size() != num_vars) throw InvalidArgument("linear row has wrong length");
  A_lin.conservativeResize(A_lin.rows() + 1, num_vars);
  A_lin.row(A_lin.rows() - 1) = row.transpose();
  b_lin.conservativeResize(b_lin.size() + 1);
  b_lin(b_lin.size() - 1) = rhs;
}

void ConicProgram::add_cone(const MatrixXd& E, const VectorXd& f, const VectorXd& g, double h) {
  cones.push_back({E, f, g, h});
}

void ConicProgram::validate() const {
  if (num_vars <= 0) throw InvalidArgument("conic program needs at least one variable");
  if (c.size() != num_vars) throw InvalidArgument("objective length mismatch");
  if (A_lin.cols() != num_vars || A_lin.rows() != b_lin.size())
    throw InvalidArgument("linear constraint dimension mismatch");
  if (!c.allFinite() || !A_lin.allFinite() || !b_lin.allFinite())
    throw InvalidArgument("conic program data must be finite");
  for (const auto& k : cones) {
    if (k.E.cols() != num_vars || k.g.size() != num_vars || k.E.rows() != k.f.size() || k.E.rows() < 1)
      throw InvalidArgument("cone constraint dimension mismatch");
    if (!k.E.allFinite() || !k.f.allFinite() || !k.g.allFinite() || !std::isfinite(k.h))
      throw InvalidArgument("cone constraint data must be finite");
  }
}

double ConicProgram::max_violation(const VectorXd& x) const {
  double worst = 0.0;
  if (A_lin.rows() > 0) worst = std::max(worst, (A_lin * x - b_lin).maxCoeff());
  for (const auto& k : cones) worst = std::max(worst, (k.E * x + k.f).norm() - k.g.dot(x) - k.h);
  return worst;
}

std::string to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::Optimal: return "Optimal";
    case ConicStatus::Infeasible: return "Infeasible";
    case ConicStatus::Unbounded: return "Unbounded";
    case ConicStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Cone K = R+^l x Q^{q_1} x ... ; slices are contiguous in that order.
struct Cones {
  int l = 0;
  std::vector<int> q;
  std::vector<int> start;
  int m = 0;

  int degree() const { return l + static_cast<int>(q.size()); }

  VectorXd identity() const {
    VectorXd e = VectorXd::Zero(m);
    e.head(l).setOnes();
    for (int start_k : start) e(start_k) = 1.0;
    return e;
  }

  // Smallest "eigenvalue" over all blocks.
  double min_eig(const VectorXd& u) const {
    double v = std::numeric_limits<double>::infinity();
    if (l > 0) v = u.head(l).minCoeff();
    for (std::size_t k = 0; k < q.size(); ++k)
      v = std::min(v, u(start[k]) - u.segment(start[k] + 1, q[k] - 1).norm());
    return v;
  }

  // Largest alpha with u + alpha du in K (u interior). Capped at `cap`.
  double max_step(const VectorXd& u, const VectorXd& du, double cap) const {
    double alpha = cap;
    for (int i = 0; i < l; ++i)
      if (du(i) < 0.0) alpha = std::min(alpha, -u(i) / du(i));
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int s = start[k], len = q[k] - 1;
      const double u0 = u(s), d0 = du(s);
      const auto u1 = u.segment(s + 1, len);
      const auto d1 = du.segment(s + 1, len);
      const double a = d0 * d0 - d1.squaredNorm();
      const double b = u0 * d0 - u1.dot(d1);
      const double c = std::max(0.0, (u0 - u1.norm()) * (u0 + u1.norm()));
      // Smallest positive root of a t^2 + 2 b t + c.
      double root = std::numeric_limits<double>::infinity();
      const double disc = b * b - a * c;
      if (std::abs(a) < 1e-300) {
        if (b < 0.0) root = -c / (2.0 * b);
      } else if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double qq = -(b + std::copysign(sq, b));
        for (double t : {qq / a, qq != 0.0 ? c / qq : std::numeric_limits<double>::infinity()})
          if (t > 0.0) root = std::min(root, t);
      }
      if (d0 < 0.0) root = std::min(root, -u0 / d0);
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  VectorXd product(const VectorXd& u, const VectorXd& v) const {
    VectorXd w(m);
    w.head(l) = u.head(l).cwiseProduct(v.head(l));
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int s = start[k], len = q[k] - 1;
      w(s) = u.segment(s, q[k]).dot(v.segment(s, q[k]));
      w.segment(s + 1, len) = u(s) * v.segment(s + 1, len) + v(s) * u.segment(s + 1, len);
    }
    return w;
  }

  // Solves lambda o w = v for w.
  VectorXd divide(const VectorXd& lambda, const VectorXd& v) const {
    VectorXd w(m);
    w.head(l) = v.head(l).cwiseQuotient(lambda.head(l));
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int s = start[k], len = q[k] - 1;
      const double l0 = lambda(s);
      const auto l1 = lambda.segment(s + 1, len);
      const double det = l0 * l0 - l1.squaredNorm();
      const double w0 = (l0 * v(s) - l1.dot(v.segment(s + 1, len))) / det;
      w(s) = w0;
      w.segment(s + 1, len) = (v.segment(s + 1, len) - w0 * l1) / l0;
    }
    return w;
  }
};

// Nesterov-Todd scaling W (symmetric) with W z = W^{-1} s = lambda.
struct Scaling {
  const Cones* cones = nullptr;
  VectorXd lp;                 // LP block diagonal
  std::vector<double> eta;     // per SOC
  std::vector<VectorXd> wbar;  // per SOC, J-normalized

  void compute(const Cones& k, const VectorXd& s, const VectorXd& z) {
    cones = &k;
    lp = (s.head(k.l).cwiseQuotient(z.head(k.l))).cwiseSqrt();
    eta.assign(k.q.size(), 0.0);
    wbar.assign(k.q.size(), VectorXd());
    for (std::size_t i = 0; i < k.q.size(); ++i) {
      const int st = k.start[i], len = k.q[i];
      VectorXd sk = s.segment(st, len), zk = z.segment(st, len);
      const double sn = std::sqrt((sk(0) - sk.tail(len - 1).norm()) * (sk(0) + sk.tail(len - 1).norm()));
      const double zn = std::sqrt((zk(0) - zk.tail(len - 1).norm()) * (zk(0) + zk.tail(len - 1).norm()));
      sk /= sn;
      zk /= zn;
      const double gamma = std::sqrt(0.5 * (1.0 + sk.dot(zk)));
      VectorXd w(len);
      w(0) = (sk(0) + zk(0)) / (2.0 * gamma);
      w.tail(len - 1) = (sk.tail(len - 1) - zk.tail(len - 1)) / (2.0 * gamma);
      wbar[i] = w;
      eta[i] = std::sqrt(sn / zn);
    }
  }

  VectorXd apply(const VectorXd& v, bool inverse) const {
    const Cones& k = *cones;
    VectorXd out(v.size());
    if (inverse) out.head(k.l) = v.head(k.l).cwiseQuotient(lp);
    else out.head(k.l) = v.head(k.l).cwiseProduct(lp);
    for (std::size_t i = 0; i < k.q.size(); ++i) {
      const int st = k.start[i], len = k.q[i] - 1;
      const VectorXd& w = wbar[i];
      const double v0 = v(st);
      const auto v1 = v.segment(st + 1, len);
      const double wv = w.tail(len).dot(v1);
      const double sign = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / eta[i] : eta[i];
      out(st) = scale * (w(0) * v0 + sign * wv);
      out.segment(st + 1, len) = scale * (v1 + (wv / (1.0 + w(0)) + sign * v0) * w.tail(len));
    }
    return out;
  }

  // W^{-1} as a block-diagonal sparse matrix.
  SparseMatrix inverse_matrix() const {
    const Cones& k = *cones;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(k.l + k.q.size() * 16);
    for (int i = 0; i < k.l; ++i) t.emplace_back(i, i, 1.0 / lp(i));
    for (std::size_t i = 0; i < k.q.size(); ++i) {
      const int st = k.start[i], len = k.q[i] - 1;
      const VectorXd& w = wbar[i];
      const double scale = 1.0 / eta[i];
      t.emplace_back(st, st, scale * w(0));
      for (int a = 1; a <= len; ++a) {
        t.emplace_back(st, st + a, -scale * w(a));
        t.emplace_back(st + a, st, -scale * w(a));
        for (int b = 1; b <= len; ++b)
          t.emplace_back(st + a, st + b, scale * ((a == b ? 1.0 : 0.0) + w(a) * w(b) / (1.0 + w(0))));
      }
    }
    SparseMatrix out(k.m, k.m);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }
};

struct Kkt {
  const SparseMatrix* G = nullptr;
  const Scaling* W = nullptr;
  Eigen::LLT<MatrixXd> llt;

  void factor(const SparseMatrix& g, const Scaling& w) {
    G = &g;
    W = &w;
    const SparseMatrix Gs = w.inverse_matrix() * g;
    MatrixXd M = MatrixXd(SparseMatrix(Gs.transpose()) * Gs);
    const double reg = 1e-12 * std::max(1.0, M.diagonal().maxCoeff());
    M.diagonal().array() += reg;
    llt.compute(M);
  }

  // [0 G^T; G -W^2] [x; z] = [bx; bz]
  void solve(const VectorXd& bx, const VectorXd& bz, VectorXd& x, VectorXd& z) const {
    auto hinv = [&](const VectorXd& v) { return W->apply(W->apply(v, true), true); };
    auto hmul = [&](const VectorXd& v) { return W->apply(W->apply(v, false), false); };
    auto once = [&](const VectorXd& rx, const VectorXd& rz, VectorXd& ox, VectorXd& oz) {
      ox = llt.solve(rx + G->transpose() * hinv(rz));
      oz = hinv(*G * ox - rz);
    };
    once(bx, bz, x, z);
    for (int it = 0; it < 3; ++it) {
      const VectorXd rx = bx - G->transpose() * z;
      const VectorXd rz = bz - (*G * x - hmul(z));
      if (rx.lpNorm<Eigen::Infinity>() + rz.lpNorm<Eigen::Infinity>() <=
          1e-14 * (1.0 + bx.lpNorm<Eigen::Infinity>() + bz.lpNorm<Eigen::Infinity>()))
        break;
      VectorXd dx, dz;
      once(rx, rz, dx, dz);
      x += dx;
      z += dz;
    }
  }
};

}  // namespace

ConicSolution solve_conic(const ConicProgram& prog, const ConicOptions& opts) {
  prog.validate();
  const int n = prog.num_vars;

  Cones K;
  K.l = prog.num_linear();
  K.m = K.l;
  for (const auto& c : prog.cones) {
    K.start.push_back(K.m);
    K.q.push_back(static_cast<int>(c.E.rows()) + 1);
    K.m += K.q.back();
  }
  const int m = K.m;

  ConicSolution sol;
  if (m == 0) {
    sol.x = VectorXd::Zero(n);
    sol.status = prog.c.isZero() ? ConicStatus::Optimal : ConicStatus::Unbounded;
    return sol;
  }

  std::vector<Eigen::Triplet<double>> trip;
  auto add_row = [&](int r, const auto& row, double sign) {
    for (int j = 0; j < n; ++j)
      if (row(j) != 0.0) trip.emplace_back(r, j, sign * row(j));
  };
  VectorXd h(m);
  for (int r = 0; r < K.l; ++r) add_row(r, prog.A_lin.row(r), 1.0);
  h.head(K.l) = prog.b_lin;
  for (std::size_t i = 0; i < prog.cones.size(); ++i) {
    const auto& c = prog.cones[i];
    const int st = K.start[i];
    add_row(st, c.g, -1.0);
    h(st) = c.h;
    for (int r = 0; r < c.E.rows(); ++r) add_row(st + 1 + r, c.E.row(r), -1.0);
    h.segment(st + 1, c.E.rows()) = c.f;
  }
  SparseMatrix G(m, n);
  G.setFromTriplets(trip.begin(), trip.end());
  const VectorXd& c = prog.c;
  const double hnorm = std::max(1.0, h.norm());
  const double cnorm = std::max(1.0, c.norm());
  const VectorXd e = K.identity();

  // Least-norm starting point shifted into the cone interior.
  VectorXd x, s, z;
  {
    MatrixXd GtG = MatrixXd(SparseMatrix(G.transpose()) * G);
    GtG.diagonal().array() += 1e-10 * std::max(1.0, GtG.diagonal().maxCoeff());
    Eigen::LLT<MatrixXd> llt(GtG);
    x = llt.solve(G.transpose() * h);
    s = h - G * x;
    z = -G * llt.solve(c);
    const double as = -K.min_eig(s);
    if (as >= -1e-8) s += (1.0 + std::max(as, 0.0)) * e;
    const double az = -K.min_eig(z);
    if (az >= -1e-8) z += (1.0 + std::max(az, 0.0)) * e;
  }
  double tau = 1.0, kappa = 1.0;

  Scaling W;
  Kkt kkt;
  for (int iter = 0;; ++iter) {
    const VectorXd rx = G.transpose() * z + c * tau;
    const VectorXd rz = G * x + s - h * tau;
    const double rt = c.dot(x) + h.dot(z) + kappa;

    const double pres = (rz / tau).norm() / hnorm;
    const double dres = (rx / tau).norm() / cnorm;
    const double pcost = c.dot(x) / tau;
    const double dcost = -h.dot(z) / tau;
    const double gap = s.dot(z) / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;

    sol.iterations = iter;
    sol.x = x / tau;
    sol.objective = pcost;
    sol.max_violation = prog.max_violation(sol.x);

    if (pres <= opts.feas_tol && dres <= opts.feas_tol && (gap <= opts.abs_gap || relgap <= opts.rel_gap) &&
        sol.max_violation <= opts.feas_tol) {
      sol.status = ConicStatus::Optimal;
      return sol;
    }
    const double hz = h.dot(z), cx = c.dot(x);
    if (kappa > tau && hz < 0.0 && (G.transpose() * z).norm() <= opts.feas_tol * -hz) {
      sol.status = ConicStatus::Infeasible;
      return sol;
    }
    if (kappa > tau && cx < 0.0 && (G * x + s).norm() <= opts.feas_tol * -cx) {
      sol.status = ConicStatus::Unbounded;
      return sol;
    }
    if (iter >= opts.max_iter) {
      sol.status = ConicStatus::MaxIterations;
      return sol;
    }

    W.compute(K, s, z);
    const VectorXd lambda = W.apply(z, false);
    kkt.factor(G, W);
    if (kkt.llt.info() != Eigen::Success) {
      sol.status = ConicStatus::MaxIterations;
      return sol;
    }
    VectorXd x1, z1;
    kkt.solve(-c, h, x1, z1);
    const double denom = c.dot(x1) + h.dot(z1) - kappa / tau;

    struct Step {
      VectorXd dx, dz, ds;
      double dtau, dkappa;
    };
    auto newton = [&](const VectorXd& d_x, const VectorXd& d_z, double d_tau, const VectorXd& d_s,
                      double d_kappa) {
      Step st;
      const VectorXd ds_tilde = K.divide(lambda, d_s);
      VectorXd x2, z2;
      kkt.solve(-d_x, -d_z + W.apply(ds_tilde, false), x2, z2);
      st.dtau = (-d_tau - c.dot(x2) - h.dot(z2) + d_kappa / tau) / denom;
      st.dx = x2 + st.dtau * x1;
      st.dz = z2 + st.dtau * z1;
      st.ds = -W.apply(ds_tilde + W.apply(st.dz, false), false);
      st.dkappa = -(d_kappa + kappa * st.dtau) / tau;
      return st;
    };
    auto step_length = [&](const Step& st, double cap) {
      double a = std::min(K.max_step(s, st.ds, cap), K.max_step(z, st.dz, cap));
      if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
      if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
      return a;
    };

    const double mu = (s.dot(z) + tau * kappa) / (K.degree() + 1);
    const VectorXd ll = K.product(lambda, lambda);
    const Step aff = newton(rx, rz, rt, ll, tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff, 1.0));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    const VectorXd corr = K.product(W.apply(aff.ds, true), W.apply(aff.dz, false));
    const Step comb = newton((1.0 - sigma) * rx, (1.0 - sigma) * rz, (1.0 - sigma) * rt,
                             ll - sigma * mu * e + corr, tau * kappa - sigma * mu + aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, 0.99 * step_length(comb, 1e30));

    x += alpha * comb.dx;
    s += alpha * comb.ds;
    z += alpha * comb.dz;
    tau += alpha * comb.dtau;
    kappa += alpha * comb.dkappa;
    if (!x.allFinite() || !s.allFinite() || !z.allFinite() || !(tau > 0.0) || !(kappa > 0.0)) {
      sol.status = ConicStatus::MaxIterations;
      return sol;
    }
  }
}

void write_conic_program(std::ostream& os, const ConicProgram& prog) {
  const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, " ", " ");
  os << std::setprecision(17);
  os << "n " << prog.num_vars << '\n';
  os << "objective " << prog.c.transpose().format(row) << '\n';
  os << "linear " << prog.num_linear() << '\n';
  for (int i = 0; i < prog.num_linear(); ++i)
    os << prog.A_lin.row(i).format(row) << " | " << prog.b_lin(i) << '\n';
  os << "cones " << prog.cones.size() << '\n';
  for (const auto& k : prog.cones) {
    os << "cone " << k.E.rows() << '\n';
    for (int r = 0; r < k.E.rows(); ++r) os << k.E.row(r).format(row) << " | " << k.f(r) << '\n';
    os << k.g.transpose().format(row) << " | " << k.h << '\n';
  }
}

}  // namespace reftrack
