#include "reftrack/local/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "reftrack/solvers/qp.hpp"

namespace reftrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void NmpcConfig::validate() const {
  if (n_p < 1) throw InvalidArgument("n_p must be >= 1");
  if (!(delta_tc > 0.0) || !(delta_td > 0.0)) throw InvalidArgument("time steps must be positive");
  if (!(d_z >= 0.0)) throw InvalidArgument("d_z must be nonnegative");
  if (!(v_max > 0.0) || !(omega_max > 0.0)) throw InvalidArgument("input bounds must be positive");
  if ((q.array() < 0.0).any() || (r.array() < 0.0).any()) throw InvalidArgument("weights must be nonnegative");
  if ((state_lo.array() > state_hi.array()).any()) throw InvalidArgument("state box is empty");
  if (max_obstacles < 0 || max_iter < 1) throw InvalidArgument("bad iteration or obstacle cap");
  if (!(trust_radius > 0.0) || !(slack_weight > 0.0)) throw InvalidArgument("bad trust radius or slack weight");
}

void NmpcProblem::validate() const {
  if (n_p < 1) throw InvalidArgument("n_p must be >= 1");
  if (static_cast<int>(reference.size()) != n_p + 1 || static_cast<int>(yaw_ref.size()) != n_p + 1 ||
      static_cast<int>(v_ref.size()) != n_p)
    throw InvalidArgument("reference length must be n_p + 1");
  if ((q.array() < 0.0).any() || (r.array() < 0.0).any()) throw InvalidArgument("weights must be nonnegative");
  if (!(delta_tc > 0.0) || !(v_max > 0.0) || !(omega_max > 0.0)) throw InvalidArgument("bad bounds or step");
  if (!x0.position.allFinite()) throw InvalidArgument("x0 must be finite");
}

std::string to_string(NmpcStatus s) {
  switch (s) {
    case NmpcStatus::Optimal: return "Optimal";
    case NmpcStatus::Relaxed: return "Relaxed";
    case NmpcStatus::MaxIterations: return "MaxIterations";
    case NmpcStatus::QpFailure: return "QpFailure";
  }
  return "?";
}

NmpcState dynamics_step(const NmpcState& x, const ControlCommand& u, double delta_tc) {
  return NmpcState(x.position + u.v * delta_tc, x.yaw + u.omega_z * delta_tc);
}

NmpcProblem build_nmpc(const TrajectoryWindow& win, const NmpcState& x0, const Vec3List& obstacles,
                       const NmpcConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_p;
  NmpcProblem prob;
  prob.n_p = n;
  prob.x0 = x0;
  prob.q = cfg.q;
  prob.r = cfg.r;
  prob.state_lo = cfg.state_lo;
  prob.state_hi = cfg.state_hi;
  prob.v_max = cfg.v_max;
  prob.omega_max = cfg.omega_max;
  prob.d_z = cfg.d_z;
  prob.delta_tc = cfg.delta_tc;

  const Vec3 fallback = x0.position;
  for (int l = 0; l <= n; ++l) {
    if (l < win.size())
      prob.reference.push_back(win.points[l]);
    else
      prob.reference.push_back(win.points.empty() ? fallback : win.points.back());
  }
  for (int l = 0; l < n; ++l) prob.v_ref.push_back((prob.reference[l + 1] - prob.reference[l]) / cfg.delta_td);

  double held = x0.yaw;
  for (int l = 0; l <= n; ++l) {
    const Vec3& v = prob.v_ref[std::min(l, n - 1)];
    if (v.head<2>().norm() >= cfg.heading_eps) held += wrap_angle(std::atan2(v.y(), v.x()) - held);
    prob.yaw_ref.push_back(held);
  }

  std::vector<std::pair<double, int>> keyed;
  for (int i = 0; i < static_cast<int>(obstacles.size()); ++i)
    keyed.emplace_back((obstacles[i] - x0.position).squaredNorm(), i);
  std::sort(keyed.begin(), keyed.end());
  const int keep = std::min<int>(cfg.max_obstacles, static_cast<int>(keyed.size()));
  for (int i = 0; i < keep; ++i) prob.obstacles.push_back(obstacles[keyed[i].second]);
  return prob;
}

namespace {

std::vector<NmpcState> rollout(const NmpcProblem& prob, const std::vector<ControlCommand>& inputs) {
  std::vector<NmpcState> states{prob.x0};
  for (const auto& u : inputs) states.push_back(dynamics_step(states.back(), u, prob.delta_tc));
  return states;
}

std::vector<ControlCommand> to_commands(const VectorXd& u) {
  std::vector<ControlCommand> out(u.size() / 4);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].v = u.segment<3>(4 * k);
    out[k].omega_z = u(4 * k + 3);
  }
  return out;
}

// Condensed problem in the stacked inputs u = (v_0, ω_0, ..., v_{N-1}, ω_{N-1}).
// Positions and (unwrapped) yaw are affine in u: x_l = x0 + δ Σ_{k<l} u_k.
struct Condensed {
  const NmpcProblem& prob;
  int n;
  double dt;
  MatrixXd H;
  VectorXd g;
  VectorXd lo, hi;

  explicit Condensed(const NmpcProblem& p) : prob(p), n(p.n_p), dt(p.delta_tc) {
    const int nu = 4 * n;
    H = MatrixXd::Zero(nu, nu);
    g = VectorXd::Zero(nu);
    const Eigen::Matrix4d Q = prob.q.asDiagonal();
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) H.block<4, 4>(4 * j, 4 * k) = 2.0 * dt * dt * (n - std::max(j, k)) * Q;
      H.block<4, 4>(4 * j, 4 * j) += 2.0 * Eigen::Matrix4d(prob.r.asDiagonal());
    }
    Vec4 acc = Vec4::Zero();
    for (int l = n; l >= 1; --l) {
      acc += x0_err(l);
      g.segment<4>(4 * (l - 1)) = 2.0 * dt * prob.q.cwiseProduct(acc);
    }
    for (int k = 0; k < n; ++k) {
      Vec4 ref;
      ref << prob.v_ref[k], 0.0;
      g.segment<4>(4 * k) -= 2.0 * prob.r.cwiseProduct(ref);
    }
    lo.resize(nu);
    hi.resize(nu);
    for (int k = 0; k < n; ++k) {
      lo.segment<4>(4 * k) << -Vec3::Constant(prob.v_max), -prob.omega_max;
      hi.segment<4>(4 * k) << Vec3::Constant(prob.v_max), prob.omega_max;
    }
  }

  Vec4 x0_err(int l) const {
    Vec4 e;
    e << prob.x0.position - prob.reference[l], prob.x0.yaw - prob.yaw_ref[l];
    return e;
  }

  double cost(const VectorXd& u) const {
    double c = 0.0;
    Vec4 x;
    x << prob.x0.position, prob.x0.yaw;
    for (int l = 0; l <= n; ++l) {
      if (l > 0) x += dt * u.segment<4>(4 * (l - 1));
      Vec4 e = x;
      e.head<3>() -= prob.reference[l];
      e(3) -= prob.yaw_ref[l];
      c += e.dot(prob.q.cwiseProduct(e));
      if (l < n) {
        Vec4 d = u.segment<4>(4 * l);
        d.head<3>() -= prob.v_ref[l];
        c += d.dot(prob.r.cwiseProduct(d));
      }
    }
    return c;
  }

  Vec3List positions(const VectorXd& u) const {
    Vec3List p{prob.x0.position};
    for (int l = 1; l <= n; ++l) p.push_back(p.back() + dt * u.segment<3>(4 * (l - 1)));
    return p;
  }

  // Worst violation of the obstacle and state-box rows at step l (0 when satisfied).
  double step_violation(const Vec3& p) const {
    double v = 0.0;
    for (const auto& o : prob.obstacles) v = std::max(v, prob.d_z * prob.d_z - (p - o).squaredNorm());
    v = std::max(v, (p - prob.state_hi).maxCoeff());
    v = std::max(v, (prob.state_lo - p).maxCoeff());
    return v;
  }

  double merit(const VectorXd& u, double weight) const {
    double m = cost(u);
    const Vec3List p = positions(u);
    for (int l = 1; l <= n; ++l) m += weight * step_violation(p[l]);
    return m;
  }
};

struct Row {
  int step;      // 1..N, owner of the slack
  int kind;      // 0 obstacle, 1 state box
  int index;     // obstacle index, or axis * 2 + side for the box
  double bound;  // linear row: a·u − s_l ≤ bound
  Vec3 dir;      // a restricted to the positions of step l
};

}  // namespace

double nmpc_cost(const NmpcProblem& prob, const std::vector<ControlCommand>& inputs) {
  const auto states = rollout(prob, inputs);
  double c = 0.0;
  for (int l = 0; l <= prob.n_p; ++l) {
    Vec4 e;
    e << states[l].position - prob.reference[l], wrap_angle(states[l].yaw - prob.yaw_ref[l]);
    c += e.dot(prob.q.cwiseProduct(e));
    if (l < prob.n_p) {
      Vec4 d;
      d << inputs[l].v - prob.v_ref[l], inputs[l].omega_z;
      c += d.dot(prob.r.cwiseProduct(d));
    }
  }
  return c;
}

double max_obstacle_violation(const NmpcProblem& prob, const std::vector<NmpcState>& states) {
  double v = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l < states.size(); ++l)
    for (const auto& o : prob.obstacles)
      v = std::max(v, prob.d_z * prob.d_z - (states[l].position - o).squaredNorm());
  return v;
}

NmpcSolution solve_nmpc(const NmpcProblem& prob, const NmpcSolution* warm, const NmpcConfig& cfg) {
  prob.validate();
  cfg.validate();
  const int n = prob.n_p;
  const int nu = 4 * n;
  const double dt = prob.delta_tc;
  const double weight = cfg.slack_weight;
  const Condensed cp(prob);

  VectorXd u(nu);
  if (warm && static_cast<int>(warm->inputs.size()) >= 1) {
    const int m = static_cast<int>(warm->inputs.size());
    for (int k = 0; k < n; ++k) {
      const auto& w = warm->inputs[std::min(k + 1, m - 1)];
      u.segment<4>(4 * k) << w.v, w.omega_z;
    }
  } else {
    for (int k = 0; k < n; ++k) u.segment<4>(4 * k) << prob.v_ref[k], 0.0;
  }
  u = u.cwiseMax(cp.lo).cwiseMin(cp.hi);

  const double gscale = 1.0 + cp.g.lpNorm<Eigen::Infinity>();
  NmpcSolution sol;
  sol.status = NmpcStatus::MaxIterations;
  double phi = cp.merit(u, weight);
  double trust = cfg.trust_radius;
  // Per-step sum of obstacle multipliers from the last accepted QP; g2 has
  // Hessian −2I in the position, which enters the QP model as curvature.
  VectorXd zsum = VectorXd::Zero(n);

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    sol.iterations = iter + 1;
    const Vec3List pbar = cp.positions(u);

    // Rows that cannot bind within the trust region are skipped.
    std::vector<Row> rows;
    for (int l = 1; l <= n; ++l) {
      const double reach = std::sqrt(3.0) * 2.0 * std::min(trust, prob.v_max) * dt * l;
      const Vec3& p = pbar[l];
      for (int i = 0; i < static_cast<int>(prob.obstacles.size()); ++i) {
        const Vec3 d = p - prob.obstacles[i];
        const double dn = d.norm();
        if (dn > prob.d_z + reach) continue;
        // g2 linearized at the radial projection b = o + D·n of p̄ onto the zone
        // boundary: −2D n·(p − o) + 2D² ≤ s_l, the tangent plane of the zone.
        Vec3 nrm = d / dn;
        if (!(dn > 1e-9)) {
          const Vec3 away = prob.x0.position - prob.obstacles[i];
          nrm = away.norm() > 1e-9 ? Vec3(away.normalized()) : Vec3::UnitX();
        }
        const double dz = prob.d_z;
        rows.push_back({l, 0, i, -2.0 * dz * (nrm.dot(prob.obstacles[i]) + dz), -2.0 * dz * nrm});
      }
      for (int a = 0; a < 3; ++a) {
        if (prob.state_hi(a) - p(a) <= reach) rows.push_back({l, 1, 2 * a, prob.state_hi(a), Vec3::Unit(a)});
        if (p(a) - prob.state_lo(a) <= reach) rows.push_back({l, 1, 2 * a + 1, -prob.state_lo(a), -Vec3::Unit(a)});
      }
    }

    // Variables (u, s_1..s_N); rows: u upper, u lower, s ≥ 0, linearized rows.
    const int nv = nu + n;
    const int nr = static_cast<int>(rows.size());
    MatrixXd HL = cp.H;
    for (double damp = 1.0; damp > 1e-3; damp *= 0.5) {
      HL = cp.H;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double c = zsum.tail(n - std::max(j, k)).sum();
          HL.block<3, 3>(4 * j, 4 * k).diagonal().array() -= 2.0 * dt * dt * damp * c;
        }
      if (zsum.sum() == 0.0 || Eigen::LLT<MatrixXd>(HL).info() == Eigen::Success) break;
      HL = cp.H;
    }
    const VectorXd grad_bar = cp.H * u + cp.g;
    QuadraticProgram qp;
    qp.P = MatrixXd::Zero(nv, nv);
    qp.P.topLeftCorner(nu, nu) = HL;
    qp.q = VectorXd::Zero(nv);
    qp.q.head(nu) = grad_bar - HL * u;
    qp.q.tail(n).setConstant(weight);
    const VectorXd ulo = cp.lo.cwiseMax((u.array() - trust).matrix());
    const VectorXd uhi = cp.hi.cwiseMin((u.array() + trust).matrix());
    qp.A = MatrixXd::Zero(2 * nu + n + nr, nv);
    qp.b = VectorXd::Zero(2 * nu + n + nr);
    qp.A.topLeftCorner(nu, nu).setIdentity();
    qp.b.head(nu) = uhi;
    qp.A.block(nu, 0, nu, nu) = -MatrixXd::Identity(nu, nu);
    qp.b.segment(nu, nu) = -ulo;
    qp.A.block(2 * nu, nu, n, n) = -MatrixXd::Identity(n, n);
    for (int r = 0; r < nr; ++r) {
      const Row& row = rows[r];
      const int ri = 2 * nu + n + r;
      // p_l = p_0 + δ Σ_{k<l} v_k
      for (int k = 0; k < row.step; ++k) qp.A.block<1, 3>(ri, 4 * k) = dt * row.dir.transpose();
      qp.A(ri, nu + row.step - 1) = -1.0;
      qp.b(ri) = row.bound - row.dir.dot(prob.x0.position);
    }

    const QpSolution qs = solve_qp(qp);

    if (qs.status != QpStatus::Optimal) {
      sol.status = NmpcStatus::QpFailure;
      break;
    }
    const VectorXd unew = qs.x.head(nu).cwiseMax(cp.lo).cwiseMin(cp.hi);
    const double phinew = cp.merit(unew, weight);
    const double step = (unew - u).lpNorm<Eigen::Infinity>();
    const VectorXd du = unew - u;
    const double model = cp.cost(u) + grad_bar.dot(du) + 0.5 * du.dot(HL * du) + weight * qs.x.tail(n).sum();
    const double pred = phi - model;
    const double actual = phi - phinew;
    const double small = 1e-12 * std::max(1.0, std::abs(phi));
    if (actual < 0.1 * pred && !(pred <= small && actual >= -small)) {
      trust = 0.25 * std::min(trust, step);
      if (trust < 1e-10) break;
      continue;
    }
    if (actual > 0.75 * pred && step >= 0.9 * trust) trust = std::min(2.0 * trust, 4.0 * cfg.trust_radius);

    // Stationarity and complementarity of the original problem at unew,
    // with the QP multipliers and the exact constraint gradients.
    const Vec3List pn = cp.positions(unew);
    VectorXd rd = cp.H * unew + cp.g;
    double compl_res = 0.0;
    for (int i = 0; i < nu; ++i) {
      const double z_hi = qs.z(i), z_lo = qs.z(nu + i);
      rd(i) += z_hi - z_lo;
      compl_res = std::max({compl_res, z_hi * (cp.hi(i) - unew(i)), z_lo * (unew(i) - cp.lo(i))});
    }
    VectorXd rs = VectorXd::Constant(n, weight) - qs.z.segment(2 * nu, n);
    zsum.setZero();
    for (int r = 0; r < nr; ++r) {
      const Row& row = rows[r];
      const double z = qs.z(2 * nu + n + r);
      const Vec3& p = pn[row.step];
      Vec3 grad = row.dir;
      double val;
      if (row.kind == 0) {
        zsum(row.step - 1) += z;
        const Vec3 d = p - prob.obstacles[row.index];
        grad = -2.0 * d;
        val = prob.d_z * prob.d_z - d.squaredNorm();
      } else {
        val = row.dir.dot(p) - row.bound;
      }
      for (int k = 0; k < row.step; ++k) rd.segment<3>(4 * k) += z * dt * grad;
      rs(row.step - 1) -= z;
      compl_res = std::max(compl_res, z * std::abs(val - qs.x(nu + row.step - 1)));
    }
    sol.kkt_residual = std::max({rd.lpNorm<Eigen::Infinity>(), rs.lpNorm<Eigen::Infinity>(), compl_res}) / gscale;

    u = unew;
    phi = phinew;
    if (sol.kkt_residual <= cfg.kkt_tol || step <= 1e-12) {
      sol.status = NmpcStatus::Optimal;
      break;
    }
  }

  sol.inputs = to_commands(u);
  sol.states = rollout(prob, sol.inputs);
  sol.cost = nmpc_cost(prob, sol.inputs);
  const Vec3List p = cp.positions(u);
  for (int l = 1; l <= n; ++l) sol.max_slack = std::max(sol.max_slack, cp.step_violation(p[l]));
  // ‖p − o‖ ≥ D_z − 1e-6 expressed on the squared form; state boxes to 1e-8.
  const double margin = prob.d_z * prob.d_z - std::pow(std::max(prob.d_z - 1e-6, 0.0), 2);
  bool relaxed = max_obstacle_violation(prob, sol.states) > margin;
  for (int l = 1; l <= n; ++l)
    relaxed = relaxed || (p[l] - prob.state_hi).maxCoeff() > 1e-8 || (prob.state_lo - p[l]).maxCoeff() > 1e-8;
  if (sol.status == NmpcStatus::Optimal && relaxed) sol.status = NmpcStatus::Relaxed;
  return sol;
}

void write_log_header(std::ostream& os) {
  os << "timestamp,x,y,z,yaw,vx,vy,vz,omega,status,iterations,seconds\n";
}

void write_log_record(std::ostream& os, const NmpcLogRecord& rec) {
  os << std::setprecision(10) << rec.timestamp << ',' << rec.x0.position.x() << ',' << rec.x0.position.y()
     << ',' << rec.x0.position.z() << ',' << rec.x0.yaw << ',' << rec.u.v.x() << ',' << rec.u.v.y() << ','
     << rec.u.v.z() << ',' << rec.u.omega_z << ',' << to_string(rec.status) << ',' << rec.iterations << ','
     << rec.solve_time << '\n';
}

}  // namespace reftrack
