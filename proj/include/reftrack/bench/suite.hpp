#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "reftrack/bench/simulator.hpp"

namespace reftrack {

struct NamedConfig {
  std::string name;
  BenchConfig cfg;
};

struct SuiteRecord {
  std::string config;
  EpisodeMetrics metrics;
};

/// One config row of the benchmark table. MCT statistics are over episodes; distance statistics
/// over successful episodes only (zero when there are none).
struct SuiteRow {
  std::string config;
  int episodes = 0;
  int successes = 0;
  double sf = 0.0;
  double mct_mean = 0.0;
  double mct_sd = 0.0;
  double distance_mean = 0.0;
  double distance_max = 0.0;
  double distance_min = 0.0;
};

struct BenchmarkTable {
  std::vector<SuiteRow> rows;
  std::vector<SuiteRecord> records;
};

/// "1..12", "3", or "1,4,7" (ranges and lists may be mixed).
std::vector<std::uint64_t> parse_seed_list(const std::string& spec);

/// Configs from every `*.txt` / `*.cfg` file in dir, named by file stem, sorted by name.
std::vector<NamedConfig> read_config_dir(const std::string& dir);

SuiteRow aggregate(const std::string& config, const std::vector<EpisodeMetrics>& episodes);

using SuiteProgress = std::function<void(const SuiteRecord&)>;

/// Every (config, seed) episode on its own generated forest. Episodes are
/// spread over `parallelism` threads; results are ordered by (config, seed).
BenchmarkTable run_suite(const std::vector<std::uint64_t>& seeds, const std::vector<NamedConfig>& configs,
                         RunMode mode, int parallelism = 1, const SuiteProgress& progress = {});

/// `config,episodes,successes,sf,mct_mean_s,mct_sd_s,distance_mean_m,distance_max_m,distance_min_m`
void write_table_csv(std::ostream& os, const BenchmarkTable& table);
/// Deterministic per-episode fields as a JSON array.
void write_records_json(std::ostream& os, const BenchmarkTable& table);

struct CategoryStats {
  std::string name;
  int count = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct RuntimeBreakdown {
  std::vector<CategoryStats> categories;  // nmpc, edt, smoothing+feasibility, gradients, pushing
  int cycles = 0;
  double cycle_mean = 0.0;
};

RuntimeBreakdown record_runtime_breakdown(const std::vector<TimingRecord>& logs);
void write_breakdown(std::ostream& os, const RuntimeBreakdown& b);

}  // namespace reftrack
