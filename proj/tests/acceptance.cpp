// Acceptance checks, one pass/fail line per criterion. Exit status is
// nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "reftrack/bench/suite.hpp"

using namespace reftrack;
using namespace reftrack::oracles;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

TrajectoryWindow make_window(const Vec3List& pts) {
  TrajectoryWindow w;
  w.points = pts;
  w.c_e = static_cast<int>(pts.size()) - 1;
  return w;
}

Polyhedron box_polyhedron(const Vec3& lo, const Vec3& hi) {
  Polyhedron p;
  for (int k = 0; k < 3; ++k) {
    p.add(Vec3::Unit(k), hi[k]);
    p.add(-Vec3::Unit(k), -lo[k]);
  }
  return p;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937 rng(101);
  const GlobalConfig cfg;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec3List pts = random_points(rng, 12, 0.05);
    while (near_feasibility_kink(pts, cfg, 1e-4)) pts = random_points(rng, 12, 0.05);
    const GradientInfo g = random_gradients(rng, pts, cfg);
    worst = std::max({worst, max_gradient_error(pts, [](const Vec3List& p) { return cost_smooth(p); }),
                      max_gradient_error(pts, [&](const Vec3List& p) { return cost_feasibility(p, cfg); }),
                      max_gradient_error(pts, [&](const Vec3List& p) { return cost_obstacle(p, g, cfg); })});
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 5.0, "100 windows, max relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f s", t)};
}

Outcome edt_oracle() {
  const auto t0 = Clock::now();
  int mismatches = 0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const VoxelGrid g = random_grid(32, 0.1, 0.002 * seed, seed);
    const EdtMap edt = compute_edt(g, 5.0);
    const auto ref = brute_force_edt(g, 5.0);
    for (std::size_t i = 0; i < ref.size(); ++i) mismatches += edt.distances()[i] != ref[i];
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 30.0, "20 grids of 32^3, " + std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", t)};
}

Outcome solvers() {
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GlobalConfig cfg;
  cfg.degeneracy_eps = 0.0;
  double push_viol = 0.0, push_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // Two overlapping boxes around a shared point; the chord bulges out of them.
    const int n = 5 + static_cast<int>(rng() % 5);
    const Vec3 shared(u(rng), u(rng), u(rng));
    const Vec3 lo0 = shared - Vec3(2.0, 0.3 + 0.2 * std::abs(u(rng)), 0.4), hi0 = shared + Vec3(0.2, 0.4, 0.3);
    const Vec3 lo1 = shared - Vec3(0.2, 0.5, 0.3), hi1 = shared + Vec3(2.0, 0.3 + 0.2 * std::abs(u(rng)), 0.5);
    OccupiedSegment seg;
    for (int j = 0; j <= n; ++j) {
      const double s = static_cast<double>(j) / n;
      seg.points.push_back(shared + Vec3(-1.6 + 3.2 * s, 1.2 * std::sin(M_PI * s) + 0.2 * u(rng), 0.3 * u(rng)));
    }
    seg.end_idx = n;
    const std::vector<int> bps = {0, n / 2, n};
    const auto assignment = assign_to_subsegments(n + 1, bps);
    const std::vector<Polyhedron> polys = {box_polyhedron(lo0, hi0), box_polyhedron(lo1, hi1)};
    Vec3List lo(n + 1, Vec3::Constant(-1e9)), hi(n + 1, Vec3::Constant(1e9));
    for (int j = 0; j <= n; ++j)
      for (int k : assignment[j]) {
        lo[j] = lo[j].cwiseMax(k == 0 ? lo0 : lo1);
        hi[j] = hi[j].cwiseMin(k == 0 ? hi0 : hi1);
      }
    ProjectedSegment proj;
    try {
      proj = find_pushing_directions(seg, polys, assignment, cfg);
    } catch (const PushFailed& e) {
      return {false, std::string("pushing instance failed: ") + e.what()};
    }
    for (int j = 0; j <= n; ++j)
      for (int k : assignment[j]) push_viol = std::max(push_viol, polys[k].max_violation(proj.points[j]));
    push_gap = std::max(push_gap, std::abs(proj.objective - pushing_subgradient_oracle(seg.points, lo, hi, cfg, 400000)));
  }

  double rec_viol = 0.0, rec_gap = 0.0, rec_point = 0.0;
  std::mt19937 rng2(304);
  std::uniform_real_distribution<double> w(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Polyhedron> boxes;
    std::vector<std::pair<Vec3, Vec3>> extents;
    for (int b = 0; b < 3; ++b) {
      const Vec3 blo(w(rng2), w(rng2), w(rng2));
      const Vec3 bhi = blo + Vec3(1 + std::abs(w(rng2)), 1, 0.5 + std::abs(w(rng2)));
      boxes.push_back(box_polyhedron(blo, bhi));
      extents.emplace_back(blo, bhi);
    }
    Vec3List pts;
    std::vector<std::vector<int>> assignment;
    for (int l = 0; l < 8; ++l) {
      pts.push_back(Vec3(w(rng2), w(rng2), w(rng2)));
      assignment.push_back({static_cast<int>(rng2() % 3)});
    }
    RecoveryResult r;
    try {
      r = solve_recovery(pts, boxes, assignment, ConicOptions{1e-9, 1e-9, 1e-10, 100});
    } catch (const std::exception& e) {
      return {false, std::string("recovery instance failed: ") + e.what()};
    }
    double total = 0.0;
    for (int l = 1; l < 8; ++l) {
      const auto& [blo, bhi] = extents[assignment[l][0]];
      const Vec3 p = pts[l].cwiseMax(blo).cwiseMin(bhi);
      total += (p - pts[l]).norm();
      rec_point = std::max(rec_point, (r.points[l] - p).norm());
      rec_viol = std::max(rec_viol, boxes[assignment[l][0]].max_violation(r.points[l]));
    }
    rec_gap = std::max(rec_gap, std::abs(r.objective - total));
  }
  const bool pass = push_viol <= 1e-6 && push_gap <= 1e-4 && rec_viol <= 1e-6 && rec_gap <= 1e-4 && rec_point <= 1e-4;
  return {pass, "pushing: violation " + fmt("%.1e", push_viol) + ", objective gap " + fmt("%.1e", push_gap) +
                    "; recovery: violation " + fmt("%.1e", rec_viol) + ", objective gap " + fmt("%.1e", rec_gap) +
                    ", point gap " + fmt("%.1e", rec_point)};
}

Outcome crossing_identity() {
  std::mt19937 rng(404);
  std::normal_distribution<double> N(0.0, 0.3);
  double worst = 0.0;
  int active = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    OccupiedSegment seg;
    ProjectedSegment proj;
    for (int i = 0; i <= n; ++i) {
      seg.points.push_back(Vec3(0.3 * i, 0, 0) + Vec3(N(rng), N(rng), N(rng)) * 0.2);
      proj.points.push_back(Vec3(0.3 * i, 0.5, 0) + Vec3(N(rng), N(rng), N(rng)));
    }
    const GradientInfo g = calculate_gradients(seg, proj);
    for (int j = 1; j < n; ++j) {
      if (!g[j].active) continue;
      ++active;
      const Vec3 v1 = seg.points[j + 1] - seg.points[j - 1];
      const Vec3 diff = g[j].c_star - seg.points[j];
      const double scale = v1.norm() * std::max(1.0, diff.norm());
      worst = std::max(worst, std::abs(v1.dot(diff)) / scale);
    }
  }
  return {worst <= 1e-9 && active > 0,
          "1000 segment pairs, " + std::to_string(active) + " active gradients, max scaled residual " + fmt("%.1e", worst)};
}

// Wall and corridor scenes with a window bulging toward an obstacle.
Outcome corridor_refinement() {
  int passed = 0;
  std::string failures;
  for (int scene = 0; scene < 10; ++scene) {
    const bool corridor = scene >= 5;
    const double k = scene % 5;
    BoxList boxes = {Box{Vec3(3 + 0.1 * k, 2.0, 1.5), Vec3(2 + 0.3 * k, 2, 3)}};
    if (corridor) boxes.push_back(Box{Vec3(3, -2.4 - 0.05 * k, 1.5), Vec3(2 + 0.3 * k, 2, 3)});
    const EdtMap edt = solid_edt(boxes, Vec3(-1, -5, 0), Vec3(7, 4, 3));
    const int n = 31;
    const double amp = 0.8 + 0.05 * k;
    Vec3List pts;
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / (n - 1);
      pts.push_back(Vec3(1.5 + 3.0 * s, amp * std::sin(M_PI * s) - 0.3, 1.5 + 0.05 * k * std::sin(2 * M_PI * s)));
    }
    const GlobalConfig cfg;
    const RefineResult res = refine(make_window(pts), edt, cfg);
    double before = 1e9, after = 1e9;
    for (int i = 0; i < n; ++i) {
      before = std::min(before, edt.distance(pts[i]));
      after = std::min(after, edt.distance(res.window.points[i]));
    }
    bool ends = true;
    for (int i = 0; i < cfg.fixed_ends; ++i)
      ends = ends && res.window.points[i] == pts[i] && res.window.points[n - 1 - i] == pts[n - 1 - i];
    const bool ok = !res.segments.empty() && after > before && res.cost_after <= res.cost_before && ends;
    if (ok)
      ++passed;
    else
      failures += " " + std::to_string(scene);
  }
  return {passed == 10, std::to_string(passed) + "/10 scenes" + (failures.empty() ? "" : ", failing:" + failures)};
}

Outcome nmpc() {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto line = [](const Vec3& start, const Vec3& step, int n) {
    Vec3List pts;
    for (int i = 0; i < n; ++i) pts.push_back(start + i * step);
    return make_window(pts);
  };
  double defect = 0.0, input = 0.0, margin = 1e9;
  int optimal = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto win = line(Vec3(u(rng), u(rng), 0.2 * u(rng)), 0.03 * Vec3(u(rng), u(rng), 0.3 * u(rng)), 16);
    Vec3List obs;
    for (int k = 0; k < 6; ++k) {
      const Vec3 o = win.points[5 + 2 * k] + 0.5 * Vec3(u(rng), u(rng), u(rng));
      if (o.norm() > 0.9) obs.push_back(o);
    }
    const auto prob = build_nmpc(win, NmpcState(Vec3::Zero(), M_PI * u(rng)), obs, NmpcConfig{});
    const auto sol = solve_nmpc(prob);
    for (int l = 0; l < prob.n_p; ++l) {
      const NmpcState next = dynamics_step(sol.states[l], sol.inputs[l], prob.delta_tc);
      defect = std::max({defect, (next.position - sol.states[l + 1].position).norm(),
                         std::abs(wrap_angle(next.yaw - sol.states[l + 1].yaw))});
      input = std::max(input, sol.inputs[l].v.lpNorm<Eigen::Infinity>());
    }
    if (sol.status != NmpcStatus::Optimal) continue;
    ++optimal;
    for (int l = 1; l <= prob.n_p; ++l)
      for (const auto& o : prob.obstacles) margin = std::min(margin, (sol.states[l].position - o).norm());
  }
  NmpcConfig tiny;
  tiny.n_p = 3;
  double ratio = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const Vec3 dir = Vec3(u(rng), u(rng), 0.3 * u(rng)).normalized();
    const Vec3 side = dir.cross(Vec3::UnitZ()).normalized();
    const Vec3 o = (0.85 + 0.05 * u(rng)) * dir + 0.1 * u(rng) * side;
    const auto prob = build_nmpc(line(Vec3::Zero(), 0.03 * dir, 4), NmpcState(), {o}, tiny);
    ratio = std::max(ratio, solve_nmpc(prob, nullptr, tiny).cost / grid_oracle(prob));
  }
  const NmpcConfig cfg;
  const bool pass = defect <= 1e-6 && input <= cfg.v_max + 1e-9 && margin >= cfg.d_z - 1e-6 && optimal > 0 && ratio <= 1.05;
  return {pass, "defect " + fmt("%.1e", defect) + ", max |v| " + fmt("%.4f", input) + ", min margin " +
                    fmt("%.4f", margin) + " over " + std::to_string(optimal) + " optimal solves, tiny cost/oracle " +
                    fmt("%.4f", ratio)};
}

EpisodeResult free_space_episode() {
  BenchConfig cfg;
  cfg.n_obstacles = 0;
  return simulate_episode(generate_forest(1, ForestParams::from_config(cfg)), cfg);
}

Outcome free_space(const EpisodeResult& res) {
  const auto& m = res.metrics;
  const bool pass = m.success && m.mean_tracking_error < 1.0 && m.max_tracking_error < 1.5;
  return {pass, std::string(m.success ? "reached goal" : "did not reach goal") + ", reference " +
                    fmt("%.2f m", m.straight_line_distance) + ", mean error " + fmt("%.3f m", m.mean_tracking_error) +
                    ", max error " + fmt("%.3f m", m.max_tracking_error)};
}

Outcome benchmark(const std::string& seeds) {
  const auto t0 = Clock::now();
  BenchConfig cfg;
  cfg.n_p = 15;
  cfg.update_range = 6.0;
  const auto table = run_suite(parse_seed_list(seeds), {{"proposed", cfg}}, RunMode::Lockstep, 1,
                               [](const SuiteRecord& r) {
                                 std::cerr << "  seed " << r.metrics.seed << ": "
                                           << (r.metrics.success ? "success" : "failure") << ", "
                                           << r.metrics.traversed_distance << " m\n";
                               });
  const double t = seconds_since(t0);
  const SuiteRow& row = table.rows.front();
  const int need = (10 * row.episodes + 11) / 12;
  const bool pass = row.successes >= need && (row.successes == 0 || row.distance_mean <= 80.0) && t < 900.0;
  return {pass, "SF " + std::to_string(row.successes) + "/" + std::to_string(row.episodes) + " (need " +
                    std::to_string(need) + "), mean distance " + fmt("%.2f m", row.distance_mean) + ", max " +
                    fmt("%.2f m", row.distance_max) + ", MCT " + fmt("%.4f s", row.mct_mean) + ", wall " +
                    fmt("%.0f s", t)};
}

Outcome determinism() {
  BenchConfig cfg;
  cfg.timeout = 15;
  auto records = [&] {
    std::ostringstream os;
    write_records_json(os, run_suite(parse_seed_list("1..3"), {{"proposed", cfg}}, RunMode::Lockstep));
    return os.str();
  };
  const bool same_suite = records() == records();

  const Environment env = generate_forest(5, ForestParams{});
  const EdtMap edt = compute_edt(rasterize(env, 0.2));
  std::mt19937 rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Segment> segs;
  for (int i = 0; i < 40; ++i) {
    const Vec3 a(40 * u(rng), 40 * u(rng), 1 + 8 * u(rng));
    const Vec3 b = a + Vec3(u(rng) - 0.5, u(rng) - 0.5, 0.2 * (u(rng) - 0.5));
    if (edt.distance(a) > 0.3 && edt.distance(b) > 0.3) segs.emplace_back(a, b);
  }
  auto dump = [&](int par) {
    std::ostringstream os;
    try {
      for (const auto& p : decompose_parallel(segs, edt, {}, par)) write_polyhedron_csv(os, p);
    } catch (const std::exception& e) {
      os << e.what();
    }
    return os.str();
  };
  const std::string serial = dump(1);
  const bool same_decomp = serial == dump(2) && serial == dump(4);
  return {same_suite && same_decomp, std::string("suite records ") + (same_suite ? "identical" : "differ") +
                                         ", decomposition of " + std::to_string(segs.size()) + " segments " +
                                         (same_decomp ? "identical" : "differs") + " for parallelism 1, 2, 4"};
}

// Short forest episode so that every sub-module does real work.
Outcome timing_report() {
  BenchConfig cfg;
  cfg.timeout = 20;
  const EpisodeResult res = simulate_episode(generate_forest(1, ForestParams::from_config(cfg)), cfg);
  std::stringstream ss;
  write_timing_log(ss, res.timings);
  const RuntimeBreakdown b = record_runtime_breakdown(read_timing_log(ss));
  bool pass = b.categories.size() == 5 && b.cycles > 0;
  std::string detail;
  for (const auto& c : b.categories) {
    pass = pass && c.count > 0;
    detail += c.name + " " + fmt("%.2e s", c.mean) + ", ";
  }
  return {pass, detail + "cycle " + fmt("%.2e s", b.cycle_mean)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string seeds = "1..12";
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--seeds", seeds, "Benchmark seeds for criterion 8");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"analytic gradients vs central differences", gradients},
      {"EDT vs brute force", edt_oracle},
      {"pushing and recovery solvers vs oracles", solvers},
      {"crossing-point orthogonality", crossing_identity},
      {"corridor refinement", corridor_refinement},
      {"NMPC feasibility and grid oracle", nmpc},
      {"free-space tracking", [] { return free_space(free_space_episode()); }},
      {"forest benchmark", [&] { return benchmark(seeds); }},
      {"determinism", determinism},
      {"runtime breakdown", timing_report},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (!wanted(k)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
