#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reftrack/bench/environment.hpp"

namespace reftrack {

enum class RunMode { Lockstep, Realtime };

RunMode parse_run_mode(const std::string& s);
std::string to_string(RunMode m);

/// One `cycle,module,seconds` line of the runtime log.
struct TimingRecord {
  int cycle = 0;
  std::string module;
  double seconds = 0.0;
};

/// Outcome of one closed-loop run. Everything except the wall-clock fields is
/// a deterministic function of (environment, config) in lockstep mode.
struct EpisodeMetrics {
  std::uint64_t seed = 0;
  bool success = false;
  bool collision = false;
  bool timed_out = false;
  bool stalled = false;
  int cycles = 0;
  double sim_time = 0.0;
  double traversed_distance = 0.0;
  double straight_line_distance = 0.0;
  double min_clearance = 0.0;
  double mean_tracking_error = 0.0;
  double max_tracking_error = 0.0;
  int refine_failures = 0;
  int recoveries = 0;
  int relaxed_solves = 0;

  // Wall-clock, seconds.
  double mct = 0.0;  // mean planner time per cycle
  double mean_nmpc = 0.0;
  double mean_edt = 0.0;
  double mean_pushing = 0.0;
  double mean_gradients = 0.0;
  double mean_smoothing_feasibility = 0.0;
  double wall_time = 0.0;
};

struct TrajectorySample {
  double t = 0.0;
  AgentState state;
  Vec3 reference = Vec3::Zero();
  double clearance = 0.0;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<TimingRecord> timings;
  std::vector<TrajectorySample> trajectory;
  std::vector<NmpcLogRecord> nmpc_log;
};

/// Closed loop of sensing, EDT, global refinement and NMPC tracking, from
/// env.start along a straight reference to env.goal. Lockstep runs one global
/// refinement every round(rate_local / rate_global) local ticks (at least 1) on
/// a single thread; realtime runs the global planner on its own thread at
/// rate_global against wall-clock time. When `debug` is set, every refinement
/// is written to it as one JSON line (see write_refine_debug).
EpisodeResult simulate_episode(const Environment& env, const BenchConfig& cfg, RunMode mode = RunMode::Lockstep,
                               std::ostream* debug = nullptr);

/// Deterministic fields only.
void write_metrics_json(std::ostream& os, const EpisodeMetrics& m);
/// Wall-clock fields only.
void write_timing_json(std::ostream& os, const EpisodeMetrics& m);
void write_timing_log(std::ostream& os, const std::vector<TimingRecord>& records);
std::vector<TimingRecord> read_timing_log(std::istream& is);
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& traj);

}  // namespace reftrack
