#include "reftrack/global/global_planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include "json.hpp"

namespace reftrack {

void GlobalConfig::validate() const {
  if (!(d_z > 0.0)) throw InvalidArgument("d_z must be positive");
  for (double w : {lambda_smooth, lambda_obs, lambda_feasibility, lambda1, lambda2, lambda3})
    if (!(w >= 0.0)) throw InvalidArgument("weights must be non-negative");
  if (!((v_max.array() > 0.0).all() && (a_max.array() > 0.0).all()))
    throw InvalidArgument("v_max and a_max must be positive");
  if (!(delta_td > 0.0)) throw InvalidArgument("delta_td must be positive");
  if (n_r < 1 || fixed_ends < 1) throw InvalidArgument("n_r and fixed_ends must be positive");
  if (!(box_radius_factor > 0.0) || !(detour_radius_factor > 0.0))
    throw InvalidArgument("box_radius_factor and detour_radius_factor must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Segment> subsegments(const Vec3List& points, const std::vector<int>& bps) {
  std::vector<Segment> out;
  if (bps.size() == 1) out.emplace_back(points[bps[0]], points[bps[0]]);
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) out.emplace_back(points[bps[k]], points[bps[k + 1]]);
  return out;
}

DecompOptions chord_options(const GlobalConfig& cfg) {
  DecompOptions opts = cfg.decomp;
  opts.segment_epsilon = std::max(opts.segment_epsilon, cfg.chord_clearance);
  return opts;
}

}  // namespace

std::vector<OccupiedSegment> checking_occupied_segments(const TrajectoryWindow& win, const EdtMap& edt,
                                                         double d_z) {
  const int m = win.size();
  if (m == 0) throw InvalidArgument("empty window");
  std::vector<OccupiedSegment> out;
  int i = 0;
  while (i < m) {
    if (!(edt.distance(win.points[i]) < d_z)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < m && edt.distance(win.points[j + 1]) < d_z) ++j;
    OccupiedSegment seg;
    seg.start_idx = std::max(i - 1, 0);
    seg.end_idx = std::min(j + 1, m - 1);
    seg.points.assign(win.points.begin() + seg.start_idx, win.points.begin() + seg.end_idx + 1);
    out.push_back(std::move(seg));
    i = j + 1;
  }
  return out;
}

std::vector<int> clear_breakpoints(const Vec3List& points, const EdtMap& edt, double d_z) {
  const int n = static_cast<int>(points.size()) - 1;
  if (n < 0) throw InvalidArgument("empty point list");
  std::vector<int> bps{0};
  for (int j = 1; j < n; ++j)
    if (edt.distance(points[j]) >= d_z) bps.push_back(j);
  if (n > 0) bps.push_back(n);
  return bps;
}

std::vector<std::vector<int>> assign_to_subsegments(int num_points, const std::vector<int>& bps) {
  std::vector<std::vector<int>> out(num_points);
  if (bps.size() == 1) {
    out[bps[0]].push_back(0);
    return out;
  }
  for (std::size_t k = 0; k + 1 < bps.size(); ++k)
    for (int j = bps[k]; j <= bps[k + 1]; ++j) out[j].push_back(static_cast<int>(k));
  return out;
}

ProjectedSegment find_pushing_directions(const OccupiedSegment& seg, const std::vector<Polyhedron>& polys,
                                         const std::vector<std::vector<int>>& assignment,
                                         const GlobalConfig& cfg, ConicProgram* dump) {
  const int n = seg.size() - 1;
  if (n < 1) throw InvalidArgument("segment needs at least two points");
  if (static_cast<int>(assignment.size()) != seg.size()) throw InvalidArgument("assignment size mismatch");

  // Layout: p_0..p_n (3 each), t1, t2, t3, s_0..s_{n-1}.
  const int np = 3 * (n + 1);
  const int it1 = np, it2 = np + 1, it3 = np + 2, is0 = np + 3;
  ConicProgram prog(np + 3 + n);
  prog.c(it1) = cfg.lambda1;
  prog.c(it2) = cfg.lambda2;
  prog.c(it3) = cfg.lambda3;

  for (int j = 0; j <= n; ++j) {
    for (int k : assignment[j]) {
      if (k < 0 || k >= static_cast<int>(polys.size())) throw InvalidArgument("polyhedron index out of range");
      const Polyhedron& P = polys[k];
      for (int r = 0; r < P.rows(); ++r) {
        VectorXd row = VectorXd::Zero(prog.num_vars);
        row.segment<3>(3 * j) = P.normals[r];
        prog.add_linear(row, P.offsets[r]);
      }
    }
  }
  auto anchor_cone = [&](int j, int t_idx) {
    MatrixXd E = MatrixXd::Zero(3, prog.num_vars);
    E.block<3, 3>(0, 3 * j).setIdentity();
    VectorXd g = VectorXd::Zero(prog.num_vars);
    g(t_idx) = 1.0;
    prog.add_cone(E, -seg.points[j], g, 0.0);
  };
  anchor_cone(0, it1);
  anchor_cone(n, it2);
  VectorXd sum_row = VectorXd::Zero(prog.num_vars);
  for (int k = 0; k < n; ++k) {
    MatrixXd E = MatrixXd::Zero(3, prog.num_vars);
    E.block<3, 3>(0, 3 * (k + 1)).setIdentity();
    E.block<3, 3>(0, 3 * k) = -Eigen::Matrix3d::Identity();
    VectorXd g = VectorXd::Zero(prog.num_vars);
    g(is0 + k) = 1.0;
    prog.add_cone(E, VectorXd::Zero(3), g, 0.0);
    sum_row(is0 + k) = 1.0;
  }
  sum_row(it3) = -1.0;
  prog.add_linear(sum_row, 0.0);
  if (dump) *dump = prog;

  const ConicSolution sol = solve_conic(prog, cfg.conic);
  if (sol.status != ConicStatus::Optimal) throw PushFailed("pushing problem: " + to_string(sol.status));

  ProjectedSegment out;
  out.objective = sol.objective;
  for (int j = 0; j <= n; ++j) out.points.push_back(sol.x.segment<3>(3 * j));

  if (n >= 2 && cfg.degeneracy_eps > 0.0) {
    bool degenerate = true;
    for (int j = 1; j < n && degenerate; ++j)
      degenerate = std::min((out.points[j] - seg.points[0]).norm(), (out.points[j] - seg.points[n]).norm()) <=
                   cfg.degeneracy_eps;
    if (degenerate) throw PushFailed("projected points collapse onto the segment ends");
  }
  return out;
}

GradientInfo calculate_gradients(const OccupiedSegment& seg, const ProjectedSegment& proj, double eps) {
  const int n = seg.size() - 1;
  if (static_cast<int>(proj.points.size()) != seg.size()) throw InvalidArgument("segment/projection size mismatch");
  GradientInfo out(seg.size());
  const Vec3List& c = seg.points;
  const Vec3List& p = proj.points;
  for (int j = 1; j < n; ++j) {
    const Vec3 v1 = c[j + 1] - c[j - 1];
    auto value = [&](int k) { return v1.dot(p[k] - c[j]); };
    int k = n / 2;
    const double first = value(k);
    int lo = -1, hi = -1;
    if (first == 0.0) {
      lo = std::max(k - 1, 0);
      hi = lo + 1;
    } else {
      // Step toward the sign change of v1 . (p_k - c_j).
      const int step = first < 0.0 ? 1 : -1;
      for (int kk = k + step; kk >= 0 && kk <= n; kk += step) {
        if (value(kk) * first <= 0.0) {
          lo = std::min(kk, kk - step);
          hi = lo + 1;
          break;
        }
      }
    }
    if (lo < 0) continue;
    const Vec3 d = p[hi] - p[lo];
    const double denom = v1.dot(d);
    if (std::abs(denom) <= 1e-15 * std::max(1.0, v1.norm() * d.norm())) continue;
    const Vec3 star = p[hi] + d * (v1.dot(c[j] - p[hi]) / denom);
    const double dd = (star - c[j]).norm();
    if (!(dd >= eps)) continue;
    out[j].c_star = star;
    out[j].grad = (star - c[j]) / dd;
    out[j].delta_d = dd;
    out[j].active = true;
  }
  return out;
}

CostResult cost_obstacle(const Vec3List& points, const GradientInfo& ginfo, const GlobalConfig& cfg) {
  const int m = static_cast<int>(points.size());
  if (static_cast<int>(ginfo.size()) != m) throw InvalidArgument("gradient info size mismatch");
  CostResult out{0.0, Vec3List(m, Vec3::Zero())};
  for (int i = cfg.fixed_ends; i <= m - 1 - cfg.fixed_ends; ++i) {
    const PointGradient& g = ginfo[i];
    if (!g.active) continue;
    const double dis = cfg.d_z - (points[i] - g.c_star).dot(g.grad);
    if (dis <= 0.0) continue;
    out.value += dis * dis * dis;
    out.grad[i] = -3.0 * dis * dis * g.grad;
  }
  return out;
}

CostResult cost_smooth(const Vec3List& points) {
  const int m = static_cast<int>(points.size());
  if (m < 3) throw InvalidArgument("smoothness cost needs at least three points");
  CostResult out{0.0, Vec3List(m, Vec3::Zero())};
  for (int i = 0; i + 2 < m; ++i) {
    const Vec3 a = points[i + 2] - 2.0 * points[i + 1] + points[i];
    out.value += a.squaredNorm();
    out.grad[i] += 2.0 * a;
    out.grad[i + 1] -= 4.0 * a;
    out.grad[i + 2] += 2.0 * a;
  }
  return out;
}

CostResult cost_feasibility(const Vec3List& points, const GlobalConfig& cfg) {
  const int m = static_cast<int>(points.size());
  if (m < 3) throw InvalidArgument("feasibility cost needs at least three points");
  CostResult out{0.0, Vec3List(m, Vec3::Zero())};
  const double dt = cfg.delta_td;
  const Vec3 vlim = cfg.v_max * dt;
  const Vec3 alim = cfg.a_max * dt * dt;
  auto excess = [](double x, double lim) {
    if (x > lim) return x - lim;
    if (x < -lim) return x + lim;
    return 0.0;
  };
  for (int i = 0; i + 1 < m; ++i) {
    const Vec3 v = points[i + 1] - points[i];
    for (int k = 0; k < 3; ++k) {
      const double e = excess(v[k], vlim[k]);
      if (e == 0.0) continue;
      out.value += e * e / (dt * dt);
      const double gk = 2.0 * e / (dt * dt);
      out.grad[i + 1][k] += gk;
      out.grad[i][k] -= gk;
    }
  }
  for (int i = 0; i + 2 < m; ++i) {
    const Vec3 a = points[i + 2] - 2.0 * points[i + 1] + points[i];
    for (int k = 0; k < 3; ++k) {
      const double e = excess(a[k], alim[k]);
      if (e == 0.0) continue;
      out.value += e * e;
      out.grad[i][k] += 2.0 * e;
      out.grad[i + 1][k] -= 4.0 * e;
      out.grad[i + 2][k] += 2.0 * e;
    }
  }
  return out;
}

CostResult total_cost(const Vec3List& points, const GradientInfo& ginfo, const GlobalConfig& cfg) {
  const CostResult s = cost_smooth(points);
  const CostResult o = cost_obstacle(points, ginfo, cfg);
  const CostResult f = cost_feasibility(points, cfg);
  CostResult out{cfg.lambda_smooth * s.value + cfg.lambda_obs * o.value + cfg.lambda_feasibility * f.value,
                 Vec3List(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i)
    out.grad[i] = cfg.lambda_smooth * s.grad[i] + cfg.lambda_obs * o.grad[i] + cfg.lambda_feasibility * f.grad[i];
  return out;
}

RecoveryResult solve_recovery(const Vec3List& points, const std::vector<Polyhedron>& polys,
                              const std::vector<std::vector<int>>& assignment, const ConicOptions& opts) {
  const int m = static_cast<int>(points.size());
  if (m < 2) throw InvalidArgument("recovery needs at least two points");
  if (static_cast<int>(assignment.size()) != m) throw InvalidArgument("assignment size mismatch");
  const int moved = m - 1;
  // Layout: p_1..p_{m-1} (3 each), q_1..q_{m-1}.
  ConicProgram prog(4 * moved);
  for (int l = 0; l < moved; ++l) prog.c(3 * moved + l) = 1.0;
  for (int l = 1; l < m; ++l) {
    const int base = 3 * (l - 1);
    for (int k : assignment[l]) {
      if (k < 0 || k >= static_cast<int>(polys.size())) throw InvalidArgument("polyhedron index out of range");
      const Polyhedron& P = polys[k];
      for (int r = 0; r < P.rows(); ++r) {
        VectorXd row = VectorXd::Zero(prog.num_vars);
        row.segment<3>(base) = P.normals[r];
        prog.add_linear(row, P.offsets[r] - P.normals[r].dot(points[l]));
      }
    }
    MatrixXd E = MatrixXd::Zero(3, prog.num_vars);
    E.block<3, 3>(0, base).setIdentity();
    VectorXd g = VectorXd::Zero(prog.num_vars);
    g(3 * moved + l - 1) = 1.0;
    prog.add_cone(E, VectorXd::Zero(3), g, 0.0);
  }
  const ConicSolution sol = solve_conic(prog, opts);
  if (sol.status != ConicStatus::Optimal) throw RecoveryFailed("recovery problem: " + to_string(sol.status));
  RecoveryResult out;
  out.objective = sol.objective;
  out.points = points;
  out.displacement.assign(m, Vec3::Zero());
  for (int l = 1; l < m; ++l) {
    out.displacement[l] = sol.x.segment<3>(3 * (l - 1));
    out.points[l] = points[l] + out.displacement[l];
  }
  return out;
}

namespace {

bool chord_clear(const EdtMap& edt, const Vec3& a, const Vec3& b, double eps) {
  const Vec3 pad = Vec3::Constant(eps);
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  for (const Vec3& o : edt.occupied_in_box(a.cwiseMin(b) - pad, a.cwiseMax(b) + pad)) {
    const double t = len2 > 0.0 ? std::clamp((o - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    if ((o - a - t * ab).norm() < eps) return false;
  }
  return true;
}

// Clearance of a point known to the map; points off the grid count as blocked.
double mapped_clearance(const EdtMap& edt, const Vec3& p) {
  const DistanceQuery q = edt.query(p);
  return q.inside ? q.distance : 0.0;
}

bool zone_clear(const EdtMap& edt, const Vec3& a, const Vec3& b, double d_z, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
  for (int k = 0; k <= n; ++k)
    if (mapped_clearance(edt, a + (b - a) * (static_cast<double>(k) / n)) < d_z) return false;
  return true;
}

// Shifts runs of zone points (except the fixed pose at index 0) in chunks of
// up to kChunk points. Each chunk takes the smallest offset that
// clears it and keeps the chords from the previous seed (and, for the last
// chunk, to the next clear point) outside the zone. Returns the shifted seeds
// and the breakpoints.
std::pair<Vec3List, std::vector<int>> detour_seeds(const Vec3List& pts, const EdtMap& edt, const GlobalConfig& cfg) {
  constexpr int kChunk = 8;
  static const Vec3List directions = [] {
    Vec3List d;
    for (int a = 0; a < 16; ++a) d.emplace_back(std::cos(M_PI * a / 8), std::sin(M_PI * a / 8), 0.0);
    for (double z : {M_SQRT1_2, -M_SQRT1_2})
      for (int a = 0; a < 8; ++a) d.emplace_back(M_SQRT1_2 * std::cos(M_PI * a / 4), M_SQRT1_2 * std::sin(M_PI * a / 4), z);
    d.emplace_back(0.0, 0.0, 1.0);
    d.emplace_back(0.0, 0.0, -1.0);
    return d;
  }();
  const int m = static_cast<int>(pts.size());
  const double eps = chord_options(cfg).segment_epsilon;
  const double step = edt.grid().resolution();
  const int max_steps = std::max(1, static_cast<int>(cfg.detour_radius_factor * cfg.d_z / step));
  auto passable = [&](const Vec3& a, const Vec3& b, bool check_zone) {
    return (!check_zone || zone_clear(edt, a, b, cfg.d_z, 0.5 * step)) && chord_clear(edt, a, b, eps);
  };
  Vec3List seeds = pts;
  std::vector<int> bps{0};
  int l = 1;
  while (l < m) {
    if (edt.distance(pts[l]) >= cfg.d_z) {
      bps.push_back(l++);
      continue;
    }
    const int i = l;
    int j = l;
    while (j + 1 < m && edt.distance(pts[j + 1]) < cfg.d_z) ++j;
    l = j + 1;
    Vec3 prev = pts[i - 1];
    // The pose may itself sit in the zone; only its chord must stay decomposable.
    bool prev_clear = !(i == 1 && edt.distance(pts[0]) < cfg.d_z);
    for (int cs = i; cs <= j; cs += kChunk) {
      const int ce = std::min(cs + kChunk - 1, j);
      const bool to_next = ce == j && j + 1 < m;
      Vec3 best = Vec3::Zero();
      double best_clear = -1.0;
      for (int k = 1; k <= max_steps && best_clear < 0.0; ++k) {
        for (const Vec3& dir : directions) {
          const Vec3 o = k * step * dir;
          double clear = std::numeric_limits<double>::infinity();
          for (int q = cs; q <= ce && clear >= cfg.d_z; ++q) clear = std::min(clear, mapped_clearance(edt, pts[q] + o));
          if (clear < cfg.d_z || clear <= best_clear) continue;
          if (!passable(prev, pts[cs] + o, prev_clear) || !passable(pts[cs] + o, pts[ce] + o, true) ||
              (to_next && !passable(pts[ce] + o, pts[j + 1], true)))
            continue;
          best = o;
          best_clear = clear;
        }
      }
      if (best_clear < 0.0) throw RecoveryFailed("no lateral detour clears the blocked run");
      for (int q = cs; q <= ce; ++q) seeds[q] = pts[q] + best;
      bps.push_back(cs);
      if (ce != cs) bps.push_back(ce);
      prev = seeds[ce];
      prev_clear = true;
    }
  }
  if (bps.back() != m - 1) bps.push_back(m - 1);
  return {seeds, bps};
}

}  // namespace

RecoveryResult dead_zone_recover(const TrajectoryWindow& win, const EdtMap& edt, const GlobalConfig& cfg) {
  if (win.size() < 2) throw InvalidArgument("recovery needs at least two points");
  // Zone runs are reseeded on a clear lateral detour and the half-spaces are
  // pulled in by up to d_z, so the polyhedra describe zone-free space.
  DecompOptions opts = chord_options(cfg);
  opts.margin = std::max(opts.margin, cfg.d_z);
  Vec3List seeds;
  std::vector<int> bps;
  try {
    std::tie(seeds, bps) = detour_seeds(win.points, edt, cfg);
  } catch (const RecoveryFailed&) {
    seeds = win.points;
    bps = clear_breakpoints(win.points, edt, cfg.d_z);
  }
  std::vector<Polyhedron> polys;
  try {
    polys = decompose_parallel(subsegments(seeds, bps), edt, opts, cfg.parallelism);
  } catch (const InfeasibleSegment& e) {
    throw RecoveryFailed(std::string("window decomposition: ") + e.what());
  }
  return solve_recovery(win.points, polys, assign_to_subsegments(win.size(), bps), cfg.conic);
}

RefineResult refine(const TrajectoryWindow& win, const EdtMap& edt, const GlobalConfig& cfg) {
  cfg.validate();
  RefineResult res;
  res.window = win;
  const int m = win.size();
  const int d = cfg.fixed_ends;
  res.gradients.assign(m, PointGradient{});
  if (m < 3 || m - 2 * d < 1) return res;

  auto t0 = Clock::now();
  res.segments = checking_occupied_segments(win, edt, cfg.d_z);
  try {
    for (const OccupiedSegment& seg : res.segments) {
      if (seg.size() < 2) continue;
      const std::vector<int> bps = clear_breakpoints(seg.points, edt, cfg.d_z);
      std::vector<Polyhedron> polys;
      try {
        polys = decompose_parallel(subsegments(seg.points, bps), edt, chord_options(cfg), cfg.parallelism);
      } catch (const InfeasibleSegment& e) {
        throw PushFailed(std::string("segment decomposition: ") + e.what());
      }
      const ProjectedSegment proj =
          find_pushing_directions(seg, polys, assign_to_subsegments(seg.size(), bps), cfg);
      res.timings.pushing += seconds_since(t0);
      t0 = Clock::now();
      const GradientInfo g = calculate_gradients(seg, proj);
      for (int j = 0; j < seg.size(); ++j)
        if (g[j].active) res.gradients[seg.start_idx + j] = g[j];
      res.timings.gradients += seconds_since(t0);
      t0 = Clock::now();
      res.polyhedra.insert(res.polyhedra.end(), polys.begin(), polys.end());
      res.projections.push_back(proj);
    }
  } catch (const PushFailed&) {
    res.gradients.assign(m, PointGradient{});
    res.projections.clear();
    res.polyhedra.clear();
    try {
      const RecoveryResult rec = dead_zone_recover(win, edt, cfg);
      res.recovered = true;
      for (int l = 1; l < m; ++l) {
        const double len = rec.displacement[l].norm();
        if (len <= 1e-6) continue;
        res.gradients[l] = {rec.points[l], rec.displacement[l] / len, len, true};
      }
    } catch (const RecoveryFailed&) {
      res.refine_failed = true;
    }
    res.timings.pushing += seconds_since(t0);
    if (res.refine_failed) {
      res.gradients.assign(m, PointGradient{});
      return res;
    }
  }

  t0 = Clock::now();
  const int nfree = m - 2 * d;
  VectorXd x0(3 * nfree);
  for (int i = 0; i < nfree; ++i) x0.segment<3>(3 * i) = win.points[d + i];
  const double radius = cfg.box_radius_factor * cfg.d_z;
  BoxSpec box{x0.array() - radius, x0.array() + radius};
  Vec3List work = win.points;
  Objective f = [&](const VectorXd& x, VectorXd& grad) {
    for (int i = 0; i < nfree; ++i) work[d + i] = x.segment<3>(3 * i);
    const CostResult c = total_cost(work, res.gradients, cfg);
    for (int i = 0; i < nfree; ++i) grad.segment<3>(3 * i) = c.grad[d + i];
    return c.value;
  };
  const LbfgsbResult opt = minimize_box(f, box, x0, cfg.lbfgsb);
  res.solver_status = opt.status;
  VectorXd g0(3 * nfree);
  res.cost_before = f(x0, g0);
  res.cost_after = opt.f;
  for (int i = 0; i < nfree; ++i) res.window.points[d + i] = opt.x.segment<3>(3 * i);
  res.timings.smoothing_feasibility += seconds_since(t0);
  return res;
}

void write_refine_debug(std::ostream& os, int cycle, const TrajectoryWindow& before, const RefineResult& res) {
  using nlohmann::json;
  auto vec = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  auto list = [&](const Vec3List& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back(vec(p));
    return a;
  };
  json rec;
  rec["cycle"] = cycle;
  rec["t_n"] = before.t_n;
  rec["before"] = list(before.points);
  rec["after"] = list(res.window.points);
  json segs = json::array();
  for (const auto& s : res.segments) segs.push_back({{"start", s.start_idx}, {"end", s.end_idx}});
  rec["segments"] = segs;
  json polys = json::array();
  for (const auto& p : res.polyhedra) {
    json rows = json::array();
    for (int r = 0; r < p.rows(); ++r)
      rows.push_back({p.normals[r].x(), p.normals[r].y(), p.normals[r].z(), p.offsets[r]});
    polys.push_back(rows);
  }
  rec["polyhedra"] = polys;
  json grads = json::array();
  for (std::size_t i = 0; i < res.gradients.size(); ++i) {
    const auto& g = res.gradients[i];
    if (!g.active) continue;
    grads.push_back({{"i", i}, {"c_star", vec(g.c_star)}, {"grad", vec(g.grad)}, {"delta_d", g.delta_d}});
  }
  rec["gradients"] = grads;
  rec["cost_before"] = res.cost_before;
  rec["cost_after"] = res.cost_after;
  rec["recovered"] = res.recovered;
  rec["refine_failed"] = res.refine_failed;
  os << rec.dump() << '\n';
}

}  // namespace reftrack
