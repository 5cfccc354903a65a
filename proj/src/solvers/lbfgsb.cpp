#include "reftrack/solvers/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

#include "reftrack/core/types.hpp"

namespace reftrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BoxSpec BoxSpec::unbounded(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {VectorXd::Constant(n, -inf), VectorXd::Constant(n, inf)};
}

void BoxSpec::validate(int n) const {
  if (lower.size() != n || upper.size() != n) throw InvalidArgument("bounds have wrong length");
  for (int i = 0; i < n; ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i))
      throw InvalidArgument("lower bound exceeds upper bound");
  }
}

std::string to_string(LbfgsbStatus s) {
  switch (s) {
    case LbfgsbStatus::ConvergedGrad: return "ConvergedGrad";
    case LbfgsbStatus::ConvergedF: return "ConvergedF";
    case LbfgsbStatus::MaxIterations: return "MaxIterations";
    case LbfgsbStatus::LineSearchFailed: return "LineSearchFailed";
    case LbfgsbStatus::CallbackFailed: return "CallbackFailed";
  }
  return "?";
}

double projected_gradient_norm(const VectorXd& x, const VectorXd& g, const BoxSpec& box) {
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double p = std::clamp(x(i) - g(i), box.lower(i), box.upper(i));
    worst = std::max(worst, std::abs(p - x(i)));
  }
  return worst;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct CallbackError {};

// Compact limited-memory matrix B = theta I - W M W^T.
struct Memory {
  int capacity = 8;
  std::deque<VectorXd> s, y;
  double theta = 1.0;
  MatrixXd W;  // n x 2k: [Y, theta S]
  MatrixXd M;  // 2k x 2k

  int size() const { return static_cast<int>(s.size()); }

  void clear() {
    s.clear();
    y.clear();
    theta = 1.0;
    W.resize(0, 0);
    M.resize(0, 0);
  }

  void push(const VectorXd& sk, const VectorXd& yk) {
    s.push_back(sk);
    y.push_back(yk);
    if (size() > capacity) {
      s.pop_front();
      y.pop_front();
    }
    theta = yk.squaredNorm() / sk.dot(yk);
    rebuild();
  }

  void rebuild() {
    const int k = size();
    const int n = static_cast<int>(s.front().size());
    MatrixXd S(n, k), Y(n, k);
    for (int i = 0; i < k; ++i) {
      S.col(i) = s[i];
      Y.col(i) = y[i];
    }
    W.resize(n, 2 * k);
    W.leftCols(k) = Y;
    W.rightCols(k) = theta * S;
    const MatrixXd SY = S.transpose() * Y;
    MatrixXd mid = MatrixXd::Zero(2 * k, 2 * k);
    for (int i = 0; i < k; ++i) {
      mid(i, i) = -SY(i, i);
      for (int j = 0; j < i; ++j) {
        mid(k + i, j) = SY(i, j);  // L
        mid(j, k + i) = SY(i, j);  // L^T
      }
    }
    mid.bottomRightCorner(k, k) = theta * S.transpose() * S;
    M = mid.fullPivLu().inverse();
  }
};

struct Cauchy {
  VectorXd xc;
  VectorXd c;
  std::vector<int> free;
};

Cauchy generalized_cauchy_point(const VectorXd& x, const VectorXd& g, const BoxSpec& box, const Memory& mem) {
  const int n = static_cast<int>(x.size());
  const double inf = std::numeric_limits<double>::infinity();
  const bool has_mem = mem.size() > 0;
  const int k2 = 2 * mem.size();

  VectorXd t(n), d(n);
  for (int i = 0; i < n; ++i) {
    if (g(i) < 0.0) t(i) = std::isfinite(box.upper(i)) ? (x(i) - box.upper(i)) / g(i) : inf;
    else if (g(i) > 0.0) t(i) = std::isfinite(box.lower(i)) ? (x(i) - box.lower(i)) / g(i) : inf;
    else t(i) = inf;
    d(i) = t(i) <= 0.0 ? 0.0 : -g(i);
  }

  Cauchy out;
  out.xc = x;
  out.c = VectorXd::Zero(k2);

  VectorXd p = has_mem ? VectorXd(mem.W.transpose() * d) : VectorXd::Zero(0);
  double fp = -d.squaredNorm();
  double fpp = -mem.theta * fp - (has_mem ? p.dot(mem.M * p) : 0.0);
  const double fpp0 = fpp;
  if (fp < 0.0 && fpp > 0.0) {
    double dtmin = -fp / fpp;
    std::vector<int> order;
    for (int i = 0; i < n; ++i)
      if (t(i) > 0.0 && t(i) < inf) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return t(a) < t(b); });
    double told = 0.0;
    for (int b : order) {
      const double dt = t(b) - told;
      if (dtmin < dt) break;
      const double xcb = d(b) > 0.0 ? box.upper(b) : box.lower(b);
      const double zb = xcb - x(b);
      out.xc(b) = xcb;
      const double gb = g(b);
      if (has_mem) {
        out.c += dt * p;
        const VectorXd wb = mem.W.row(b).transpose();
        const VectorXd Mwb = mem.M * wb;
        fp += dt * fpp + gb * gb + mem.theta * gb * zb - gb * Mwb.dot(out.c);
        fpp += -mem.theta * gb * gb - 2.0 * gb * Mwb.dot(p) - gb * gb * Mwb.dot(wb);
        p += gb * wb;
      } else {
        fp += dt * fpp + gb * gb + mem.theta * gb * zb;
        fpp += -mem.theta * gb * gb;
      }
      fpp = std::max(fpp, kEps * fpp0);
      d(b) = 0.0;
      dtmin = -fp / fpp;
      told = t(b);
    }
    dtmin = std::max(dtmin, 0.0);
    told += dtmin;
    for (int i = 0; i < n; ++i)
      if (d(i) != 0.0) out.xc(i) = std::clamp(x(i) + told * d(i), box.lower(i), box.upper(i));
    if (has_mem) out.c += dtmin * p;
  }
  for (int i = 0; i < n; ++i)
    if (out.xc(i) > box.lower(i) && out.xc(i) < box.upper(i)) out.free.push_back(i);
  return out;
}

// Minimizes the model over the free variables starting at the Cauchy point.
VectorXd subspace_minimum(const VectorXd& x, const VectorXd& g, const BoxSpec& box, const Memory& mem,
                          const Cauchy& cp) {
  const int nf = static_cast<int>(cp.free.size());
  if (nf == 0) return cp.xc;
  VectorXd r = g + mem.theta * (cp.xc - x);
  if (mem.size() > 0) r -= mem.W * (mem.M * cp.c);

  VectorXd rF(nf);
  for (int j = 0; j < nf; ++j) rF(j) = r(cp.free[j]);
  VectorXd du = -rF / mem.theta;
  if (mem.size() > 0) {
    const int k2 = 2 * mem.size();
    MatrixXd WF(nf, k2);
    for (int j = 0; j < nf; ++j) WF.row(j) = mem.W.row(cp.free[j]);
    const MatrixXd N = MatrixXd::Identity(k2, k2) - mem.M * (WF.transpose() * WF) / mem.theta;
    const VectorXd v = N.fullPivLu().solve(mem.M * (WF.transpose() * rF));
    du -= WF * v / (mem.theta * mem.theta);
  }

  VectorXd projected = cp.xc;
  for (int j = 0; j < nf; ++j) {
    const int i = cp.free[j];
    projected(i) = std::clamp(cp.xc(i) + du(j), box.lower(i), box.upper(i));
  }
  if ((projected - x).dot(g) < 0.0) return projected;

  double alpha = 1.0;
  for (int j = 0; j < nf; ++j) {
    const int i = cp.free[j];
    if (du(j) > 0.0) alpha = std::min(alpha, (box.upper(i) - cp.xc(i)) / du(j));
    else if (du(j) < 0.0) alpha = std::min(alpha, (box.lower(i) - cp.xc(i)) / du(j));
  }
  VectorXd out = cp.xc;
  for (int j = 0; j < nf; ++j) out(cp.free[j]) += alpha * du(j);
  return out;
}

struct Sample {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;
  VectorXd x, g;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const BoxSpec& box, int& evals) : f_(f), box_(box), evals_(evals) {}

  // Strong-Wolfe search on [0, 1]; returns the accepted sample.
  std::optional<Sample> run(const VectorXd& x, double f0, const VectorXd& g0, const VectorXd& d,
                            double alpha0) {
    x0_ = &x;
    d_ = &d;
    f0_ = f0;
    df0_ = g0.dot(d);
    Sample prev;
    prev.f = f0;
    prev.df = df0_;
    double alpha = alpha0;
    for (int i = 0; i < 30; ++i) {
      Sample cur = eval(alpha);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.df) <= -kC2 * df0_) return cur;
      if (cur.df >= 0.0) return zoom(cur, prev);
      if (alpha >= 1.0) return cur;
      prev = cur;
      alpha = std::min(2.0 * alpha, 1.0);
    }
    return std::nullopt;
  }

 private:
  static constexpr double kC1 = 1e-4;
  static constexpr double kC2 = 0.9;

  bool armijo(const Sample& s) const { return std::isfinite(s.f) && s.f <= f0_ + kC1 * s.alpha * df0_; }

  Sample eval(double alpha) {
    Sample s;
    s.alpha = alpha;
    s.x = *x0_ + alpha * *d_;
    for (int i = 0; i < s.x.size(); ++i) s.x(i) = std::clamp(s.x(i), box_.lower(i), box_.upper(i));
    s.g = VectorXd::Zero(s.x.size());
    ++evals_;
    try {
      s.f = f_(s.x, s.g);
    } catch (...) {
      throw CallbackError{};
    }
    if (!std::isfinite(s.f) || !s.g.allFinite()) {
      s.f = std::numeric_limits<double>::infinity();
      s.df = std::numeric_limits<double>::infinity();
    } else {
      s.df = s.g.dot(*d_);
    }
    return s;
  }

  std::optional<Sample> zoom(Sample lo, Sample hi) {
    for (int i = 0; i < 40; ++i) {
      const double a = lo.alpha, b = hi.alpha;
      double trial = 0.5 * (a + b);
      if (std::isfinite(hi.f)) {
        // Cubic interpolation of the bracket, safeguarded to its interior.
        const double d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (a - b);
        const double rad = d1 * d1 - lo.df * hi.df;
        if (rad >= 0.0) {
          const double d2 = std::copysign(std::sqrt(rad), b - a);
          const double cand = b - (b - a) * (hi.df + d2 - d1) / (hi.df - lo.df + 2.0 * d2);
          if (std::isfinite(cand)) trial = cand;
        }
      }
      const double lo_edge = std::min(a, b) + 0.1 * std::abs(b - a);
      const double hi_edge = std::max(a, b) - 0.1 * std::abs(b - a);
      trial = std::clamp(trial, lo_edge, hi_edge);
      Sample cur = eval(trial);
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.df) <= -kC2 * df0_) return cur;
        if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.alpha - lo.alpha) <= kEps * std::max(1.0, lo.alpha)) break;
    }
    if (lo.alpha > 0.0 && armijo(lo)) return lo;
    return std::nullopt;
  }

  const Objective& f_;
  const BoxSpec& box_;
  int& evals_;
  const VectorXd* x0_ = nullptr;
  const VectorXd* d_ = nullptr;
  double f0_ = 0.0;
  double df0_ = 0.0;
};

}  // namespace

LbfgsbResult minimize_box(const Objective& f, const BoxSpec& bounds, const VectorXd& x0,
                          const LbfgsbOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw InvalidArgument("empty variable vector");
  bounds.validate(n);
  if (opts.memory < 1 || opts.max_iter < 0) throw InvalidArgument("invalid L-BFGS-B options");
  for (int i = 0; i < n; ++i)
    if (!(x0(i) >= bounds.lower(i) && x0(i) <= bounds.upper(i))) throw InvalidArgument("x0 outside bounds");

  LbfgsbResult res;
  res.x = x0;
  VectorXd g = VectorXd::Zero(n);
  try {
    ++res.evaluations;
    res.f = f(res.x, g);
  } catch (...) {
    res.status = LbfgsbStatus::CallbackFailed;
    return res;
  }
  if (!std::isfinite(res.f) || !g.allFinite()) {
    res.status = LbfgsbStatus::CallbackFailed;
    return res;
  }

  Memory mem;
  mem.capacity = opts.memory;
  LineSearch search(f, bounds, res.evaluations);
  bool fresh = true;
  for (;;) {
    res.projected_grad_norm = projected_gradient_norm(res.x, g, bounds);
    if (res.projected_grad_norm <= opts.grad_tol) {
      res.status = LbfgsbStatus::ConvergedGrad;
      return res;
    }
    if (res.iterations >= opts.max_iter) {
      res.status = LbfgsbStatus::MaxIterations;
      return res;
    }

    std::optional<Sample> step;
    for (int attempt = 0; attempt < 2 && !step; ++attempt) {
      const Cauchy cp = generalized_cauchy_point(res.x, g, bounds, mem);
      const VectorXd d = subspace_minimum(res.x, g, bounds, mem, cp) - res.x;
      const double slope = g.dot(d);
      if (slope < 0.0) {
        const double alpha0 = fresh ? std::min(1.0, 1.0 / d.norm()) : 1.0;
        try {
          step = search.run(res.x, res.f, g, d, alpha0);
        } catch (const CallbackError&) {
          res.status = LbfgsbStatus::CallbackFailed;
          return res;
        }
      }
      if (!step) {
        if (mem.size() == 0) break;
        mem.clear();
        fresh = true;
      }
    }
    if (!step) {
      res.status = LbfgsbStatus::LineSearchFailed;
      return res;
    }

    ++res.iterations;
    fresh = false;
    const VectorXd s = step->x - res.x;
    const VectorXd y = step->g - g;
    const double f_prev = res.f;
    res.x = step->x;
    res.f = step->f;
    g = step->g;
    if (s.dot(y) > kEps * y.squaredNorm()) mem.push(s, y);

    if (f_prev - res.f <= opts.f_tol * std::max({std::abs(f_prev), std::abs(res.f), 1.0})) {
      res.projected_grad_norm = projected_gradient_norm(res.x, g, bounds);
      res.status = res.projected_grad_norm <= opts.grad_tol ? LbfgsbStatus::ConvergedGrad : LbfgsbStatus::ConvergedF;
      return res;
    }
  }
}

}  // namespace reftrack
