#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "reftrack/bench/suite.hpp"

using namespace reftrack;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  return out;
}

BenchConfig load_config(const std::string& path) { return path.empty() ? BenchConfig{} : read_config_file(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop benchmark for the reference trajectory tracker"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate a random forest environment");
  std::uint64_t seed = 1;
  std::string gen_out, gen_cfg;
  gen->add_option("--seed", seed, "Forest seed")->required();
  gen->add_option("--out", gen_out, "Environment file")->required();
  gen->add_option("--config", gen_cfg, "Config file (forest keys)");

  auto* run = app.add_subcommand("run", "Run one closed-loop episode");
  std::string env_path, run_cfg, run_mode = "lockstep", metrics_out, timing_log, timing_json, traj_csv, nmpc_log, refine_debug;
  run->add_option("--env", env_path, "Environment file")->required();
  run->add_option("--config", run_cfg, "Config file (defaults when omitted)");
  run->add_option("--mode", run_mode, "lockstep or realtime");
  run->add_option("--out", metrics_out, "Metrics JSON")->required();
  run->add_option("--timing-log", timing_log, "Per-cycle `cycle,module,seconds` log");
  run->add_option("--timings", timing_json, "Wall-clock summary JSON");
  run->add_option("--trajectory", traj_csv, "Trajectory CSV");
  run->add_option("--nmpc-log", nmpc_log, "Per-cycle NMPC log CSV");
  run->add_option("--refine-debug", refine_debug, "Per-refinement JSON lines (windows, polyhedra, gradients)");

  auto* suite = app.add_subcommand("suite", "Run every config over every seed");
  std::string seeds = "1..12", cfg_dir, table_out, records_out, suite_mode = "lockstep";
  int parallelism = 1;
  suite->add_option("--seeds", seeds, "Seed list, e.g. 1..12 or 1,3,5");
  suite->add_option("--configs", cfg_dir, "Directory of config files")->required();
  suite->add_option("--out", table_out, "Table CSV")->required();
  suite->add_option("--records", records_out, "Per-episode records JSON");
  suite->add_option("--mode", suite_mode, "lockstep or realtime");
  suite->add_option("--parallelism", parallelism, "Concurrent episodes")->check(CLI::PositiveNumber);

  auto* brk = app.add_subcommand("breakdown", "Summarize a timing log by module");
  std::string log_path;
  brk->add_option("--log", log_path, "Timing log")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Environment env = generate_forest(seed, ForestParams::from_config(load_config(gen_cfg)));
      auto out = open_out(gen_out);
      write_environment(out, env);
    } else if (*run) {
      const Environment env = read_environment_file(env_path);
      std::ofstream debug;
      if (!refine_debug.empty()) debug = open_out(refine_debug);
      const EpisodeResult res =
          simulate_episode(env, load_config(run_cfg), parse_run_mode(run_mode), debug.is_open() ? &debug : nullptr);
      auto out = open_out(metrics_out);
      write_metrics_json(out, res.metrics);
      if (!timing_log.empty()) {
        auto f = open_out(timing_log);
        write_timing_log(f, res.timings);
      }
      if (!timing_json.empty()) {
        auto f = open_out(timing_json);
        write_timing_json(f, res.metrics);
      }
      if (!traj_csv.empty()) {
        auto f = open_out(traj_csv);
        write_trajectory_csv(f, res.trajectory);
      }
      if (!nmpc_log.empty()) {
        auto f = open_out(nmpc_log);
        write_log_header(f);
        for (const auto& r : res.nmpc_log) write_log_record(f, r);
      }
      const auto& m = res.metrics;
      std::cout << (m.success ? "success" : m.collision ? "collision" : m.stalled ? "stalled" : "timeout") << " distance "
                << m.traversed_distance << " m, " << m.cycles << " cycles, mct " << m.mct << " s\n";
    } else if (*suite) {
      const auto table = run_suite(parse_seed_list(seeds), read_config_dir(cfg_dir), parse_run_mode(suite_mode),
                                   parallelism, [](const SuiteRecord& r) {
                                     std::cerr << r.config << " seed " << r.metrics.seed << ": "
                                               << (r.metrics.success ? "success" : "failure") << " "
                                               << r.metrics.traversed_distance << " m\n";
                                   });
      auto out = open_out(table_out);
      write_table_csv(out, table);
      if (!records_out.empty()) {
        auto f = open_out(records_out);
        write_records_json(f, table);
      }
      write_table_csv(std::cout, table);
    } else if (*brk) {
      std::ifstream in(log_path);
      if (!in) throw InvalidArgument("cannot open " + log_path);
      write_breakdown(std::cout, record_runtime_breakdown(read_timing_log(in)));
    }
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
