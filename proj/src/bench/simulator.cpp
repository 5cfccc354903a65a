#include "reftrack/bench/simulator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "reftrack/mapping/edt.hpp"

namespace reftrack {

RunMode parse_run_mode(const std::string& s) {
  if (s == "lockstep") return RunMode::Lockstep;
  if (s == "realtime") return RunMode::Realtime;
  throw InvalidArgument("unknown mode '" + s + "' (expected lockstep or realtime)");
}

std::string to_string(RunMode m) { return m == RunMode::Lockstep ? "lockstep" : "realtime"; }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

class Episode {
 public:
  Episode(const Environment& env, const BenchConfig& cfg, std::ostream* debug)
      : debug_(debug),
        env_(env),
        cfg_(cfg),
        gcfg_(cfg.global()),
        ncfg_(cfg.nmpc()),
        truth_(rasterize(env, cfg.resolution)),
        map_(truth_.origin(), truth_.resolution(), truth_.dims()),
        reference_(straight_line_control_points(env.start, env.goal, cfg.ref_speed, cfg.delta_td), cfg.delta_td),
        state_(env.start, std::atan2(env.goal.y() - env.start.y(), env.goal.x() - env.start.x())) {
    cfg.validate();
    ncfg_.state_hi = env.extent;
    result_.metrics.seed = env.seed;
    result_.metrics.straight_line_distance = (env.goal - env.start).norm();
    result_.metrics.min_clearance = env.clearance(state_.position);
  }

  EpisodeResult run(RunMode mode) {
    const auto t0 = Clock::now();
    if (mode == RunMode::Lockstep)
      run_lockstep();
    else
      run_realtime();
    finish(seconds_since(t0));
    return std::move(result_);
  }

 private:
  // Copies ground-truth occupancy within update_range of the vehicle into the map.
  void sense() {
    const double range = cfg_.update_range;
    const Vec3 p = state_.position;
    const Index3 lo = map_.index_of_unchecked(p - Vec3::Constant(range)).cwiseMax(Index3::Zero());
    const Index3 hi = map_.index_of_unchecked(p + Vec3::Constant(range)).cwiseMin(map_.dims() - Index3::Ones());
    const double r2 = range * range;
    for (int z = lo.z(); z <= hi.z(); ++z)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int x = lo.x(); x <= hi.x(); ++x) {
          const Index3 idx(x, y, z);
          const std::size_t lin = map_.linear(idx);
          if (truth_.occupied(lin) && (map_.center(idx) - p).squaredNorm() <= r2) map_.set_occupied(idx);
        }
  }

  std::shared_ptr<const EdtMap> local_edt() const {
    const double crop = cfg_.edt_crop;
    const Index3 lo = map_.index_of_unchecked(state_.position - Vec3::Constant(crop));
    const int n = static_cast<int>(std::ceil(2.0 * crop / map_.resolution())) + 1;
    const Index3 lo_clip = lo.cwiseMax(Index3::Zero());
    const Index3 dims = (lo + Index3::Constant(n)).cwiseMin(map_.dims()) - lo_clip;
    return std::make_shared<const EdtMap>(compute_edt(map_.crop(lo_clip, dims), crop));
  }

  // Reference clock: advances with time unless the vehicle trails too far.
  // A trailed point inside the mapped zone is stuck among the window's fixed
  // head points, so the clock steps back until refinement can move it again.
  void advance_reference(double dt, const EdtMap& edt) {
    const Vec3& ref = reference_.control_point(reference_.index_at(t_n_));
    if ((state_.position - ref).norm() <= cfg_.max_lag)
      t_n_ += dt;
    else if (edt.distance(ref) < gcfg_.d_z)
      t_n_ = std::max(0.0, t_n_ - gcfg_.fixed_ends * cfg_.delta_td);
  }

  void global_step(const EdtMap& edt, int cycle) {
    const TrajectoryWindow win = prepend_pose(reference_.window(t_n_, cfg_.n_r), state_);
    const RefineResult res = refine(win, edt, gcfg_);
    reference_.write_back(res.window);
    if (debug_) write_refine_debug(*debug_, cycle, win, res);
    record_refine(res, cycle);
  }

  void record_refine(const RefineResult& res, int cycle) {
    if (res.refine_failed) ++result_.metrics.refine_failures;
    if (res.recovered) ++result_.metrics.recoveries;
    timing(cycle, "pushing", res.timings.pushing);
    timing(cycle, "gradients", res.timings.gradients);
    timing(cycle, "smoothing+feasibility", res.timings.smoothing_feasibility);
  }

  ControlCommand local_step(const EdtMap& edt, const UniformBSpline& ref, int cycle) {
    const auto t0 = Clock::now();
    const TrajectoryWindow win = prepend_pose(ref.window(t_n_, cfg_.n_p), state_);
    const double reach = std::sqrt(3.0) * cfg_.v_max * cfg_.delta_tc * cfg_.n_p;
    const Vec3List obstacles = close_in_obstacles(edt, win, cfg_.d_z + reach + edt.grid().resolution());
    const NmpcProblem prob = build_nmpc(win, state_, obstacles, ncfg_);
    NmpcSolution sol = solve_nmpc(prob, warm_ ? &*warm_ : nullptr, ncfg_);
    const double elapsed = seconds_since(t0);
    timing(cycle, "nmpc", elapsed);
    if (sol.status == NmpcStatus::Relaxed) ++result_.metrics.relaxed_solves;
    NmpcLogRecord rec;
    rec.timestamp = sim_time_;
    rec.x0 = state_;
    rec.u = sol.inputs.front();
    rec.status = sol.status;
    rec.iterations = sol.iterations;
    rec.solve_time = elapsed;
    result_.nmpc_log.push_back(rec);
    const ControlCommand u = sol.inputs.front();
    warm_ = std::move(sol);
    return u;
  }

  // Applies u for one local period; returns false when the episode ends.
  bool apply(const ControlCommand& u, double dt, const EdtMap& edt) {
    const NmpcState next = dynamics_step(state_, u, dt);
    result_.metrics.traversed_distance += (next.position - state_.position).norm();
    state_ = next;
    sim_time_ += dt;
    advance_reference(dt, edt);
    const double clearance = env_.clearance(state_.position);
    auto& m = result_.metrics;
    m.min_clearance = std::min(m.min_clearance, clearance);
    const Vec3 ref = reference_.control_point(reference_.index_at(t_n_));
    const double err = (state_.position - ref).norm();
    err_sum_ += err;
    m.max_tracking_error = std::max(m.max_tracking_error, err);
    result_.trajectory.push_back({sim_time_, state_, ref, clearance});
    ++m.cycles;
    if (clearance < cfg_.collision_radius) {
      m.collision = true;
      return false;
    }
    if ((state_.position - env_.goal).norm() <= cfg_.goal_tol) {
      m.success = true;
      return false;
    }
    if (sim_time_ >= cfg_.timeout) {
      m.timed_out = true;
      return false;
    }
    if (stalled(dt)) {
      m.stalled = true;
      return false;
    }
    return true;
  }

  // Net displacement over the last stall_window seconds below stall_distance.
  bool stalled(double dt) const {
    if (!(cfg_.stall_window > 0.0)) return false;
    const auto back = static_cast<std::size_t>(std::lround(cfg_.stall_window / dt));
    const auto& traj = result_.trajectory;
    if (traj.size() <= back) return false;
    return (traj.back().state.position - traj[traj.size() - 1 - back].state.position).norm() < cfg_.stall_distance;
  }

  int global_interval() const {
    return std::max(1, static_cast<int>(std::lround(cfg_.rate_local / cfg_.rate_global)));
  }

  void run_lockstep() {
    const double dt = 1.0 / cfg_.rate_local;
    const int every = global_interval();
    for (int cycle = 0;; ++cycle) {
      const auto t0 = Clock::now();
      const auto te = Clock::now();
      sense();
      const auto edt = local_edt();
      timing(cycle, "edt", seconds_since(te));
      if (cycle % every == 0) global_step(*edt, cycle);
      const ControlCommand u = local_step(*edt, reference_, cycle);
      timing(cycle, "cycle", seconds_since(t0));
      if (!apply(u, dt, *edt)) break;
    }
  }

  void run_realtime() {
    const double dt = 1.0 / cfg_.rate_local;
    std::mutex mu;
    std::shared_ptr<const EdtMap> shared_edt;
    std::atomic<bool> stop{false};
    std::vector<std::pair<RefineResult, int>> refined;

    std::thread global([&] {
      const auto period = std::chrono::duration<double>(1.0 / cfg_.rate_global);
      auto next = Clock::now();
      int cycle = 0;
      while (!stop.load()) {
        next += std::chrono::duration_cast<Clock::duration>(period);
        TrajectoryWindow win;
        std::shared_ptr<const EdtMap> edt;
        {
          std::lock_guard<std::mutex> lock(mu);
          edt = shared_edt;
          if (edt) win = prepend_pose(reference_.window(t_n_, cfg_.n_r), state_);
          cycle = result_.metrics.cycles;
        }
        if (edt) {
          RefineResult res = refine(win, *edt, gcfg_);
          std::lock_guard<std::mutex> lock(mu);
          reference_.write_back(res.window);
          if (debug_) write_refine_debug(*debug_, cycle, win, res);
          refined.emplace_back(std::move(res), cycle);
        }
        std::this_thread::sleep_until(next);
      }
    });

    const auto period = std::chrono::duration<double>(dt);
    auto next = Clock::now();
    for (int cycle = 0;; ++cycle) {
      next += std::chrono::duration_cast<Clock::duration>(period);
      const auto t0 = Clock::now();
      sense();
      auto edt = local_edt();
      timing(cycle, "edt", seconds_since(t0));
      UniformBSpline snapshot = [&] {
        std::lock_guard<std::mutex> lock(mu);
        shared_edt = edt;
        return reference_;
      }();
      const ControlCommand u = local_step(*edt, snapshot, cycle);
      timing(cycle, "cycle", seconds_since(t0));
      bool more;
      {
        std::lock_guard<std::mutex> lock(mu);
        more = apply(u, dt, *edt);
      }
      if (!more) break;
      std::this_thread::sleep_until(next);
    }
    stop.store(true);
    global.join();
    for (const auto& [res, cycle] : refined) record_refine(res, cycle);
  }

  void timing(int cycle, const char* module, double seconds) { result_.timings.push_back({cycle, module, seconds}); }

  void finish(double wall) {
    auto& m = result_.metrics;
    m.sim_time = sim_time_;
    m.wall_time = wall;
    m.mean_tracking_error = m.cycles > 0 ? err_sum_ / m.cycles : 0.0;
    std::vector<double> cycle, nmpc, edt, push, grad, smooth;
    for (const auto& r : result_.timings) {
      if (r.module == "cycle") cycle.push_back(r.seconds);
      if (r.module == "nmpc") nmpc.push_back(r.seconds);
      if (r.module == "edt") edt.push_back(r.seconds);
      if (r.module == "pushing") push.push_back(r.seconds);
      if (r.module == "gradients") grad.push_back(r.seconds);
      if (r.module == "smoothing+feasibility") smooth.push_back(r.seconds);
    }
    m.mct = mean_of(cycle);
    m.mean_nmpc = mean_of(nmpc);
    m.mean_edt = mean_of(edt);
    m.mean_pushing = mean_of(push);
    m.mean_gradients = mean_of(grad);
    m.mean_smoothing_feasibility = mean_of(smooth);
  }

  std::ostream* debug_;
  const Environment& env_;
  BenchConfig cfg_;
  GlobalConfig gcfg_;
  NmpcConfig ncfg_;
  VoxelGrid truth_;
  VoxelGrid map_;
  UniformBSpline reference_;
  AgentState state_;
  double t_n_ = 0.0;
  double sim_time_ = 0.0;
  double err_sum_ = 0.0;
  std::optional<NmpcSolution> warm_;
  EpisodeResult result_;
};

}  // namespace

EpisodeResult simulate_episode(const Environment& env, const BenchConfig& cfg, RunMode mode, std::ostream* debug) {
  Episode ep(env, cfg, debug);
  return ep.run(mode);
}

void write_metrics_json(std::ostream& os, const EpisodeMetrics& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["success"] = m.success;
  j["collision"] = m.collision;
  j["timed_out"] = m.timed_out;
  j["stalled"] = m.stalled;
  j["cycles"] = m.cycles;
  j["sim_time"] = m.sim_time;
  j["traversed_distance"] = m.traversed_distance;
  j["straight_line_distance"] = m.straight_line_distance;
  j["min_clearance"] = m.min_clearance;
  j["mean_tracking_error"] = m.mean_tracking_error;
  j["max_tracking_error"] = m.max_tracking_error;
  j["refine_failures"] = m.refine_failures;
  j["recoveries"] = m.recoveries;
  j["relaxed_solves"] = m.relaxed_solves;
  os << j.dump(2) << '\n';
}

void write_timing_json(std::ostream& os, const EpisodeMetrics& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["mct"] = m.mct;
  j["mean_nmpc"] = m.mean_nmpc;
  j["mean_edt"] = m.mean_edt;
  j["mean_pushing"] = m.mean_pushing;
  j["mean_gradients"] = m.mean_gradients;
  j["mean_smoothing_feasibility"] = m.mean_smoothing_feasibility;
  j["wall_time"] = m.wall_time;
  os << j.dump(2) << '\n';
}

void write_timing_log(std::ostream& os, const std::vector<TimingRecord>& records) {
  os << std::setprecision(9);
  for (const auto& r : records) os << r.cycle << ',' << r.module << ',' << r.seconds << '\n';
}

std::vector<TimingRecord> read_timing_log(std::istream& is) {
  std::vector<TimingRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TimingRecord r;
    std::string cycle, seconds;
    if (!std::getline(ls, cycle, ',') || !std::getline(ls, r.module, ',') || !std::getline(ls, seconds))
      throw InvalidArgument("malformed timing line " + std::to_string(lineno));
    try {
      r.cycle = std::stoi(cycle);
      r.seconds = std::stod(seconds);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed timing line " + std::to_string(lineno));
    }
    out.push_back(r);
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& traj) {
  os << "t,x,y,z,yaw,ref_x,ref_y,ref_z,clearance\n" << std::setprecision(10);
  for (const auto& s : traj) {
    os << s.t << ',' << s.state.position.x() << ',' << s.state.position.y() << ',' << s.state.position.z() << ','
       << s.state.yaw << ',' << s.reference.x() << ',' << s.reference.y() << ',' << s.reference.z() << ','
       << s.clearance << '\n';
  }
}

}  // namespace reftrack
