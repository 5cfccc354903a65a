#include "reftrack/bench/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace reftrack {

namespace {

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

std::uint64_t parse_seed(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw InvalidArgument("bad seed '" + s + "'");
  return v;
}

const char* const kCategories[] = {"nmpc", "edt", "smoothing+feasibility", "gradients", "pushing"};

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::istringstream ss(spec);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) {
      const auto dots = part.find("..");
      if (dots == std::string::npos) {
        out.push_back(parse_seed(part));
        continue;
      }
      const std::uint64_t a = parse_seed(part.substr(0, dots)), b = parse_seed(part.substr(dots + 2));
      if (b < a) throw InvalidArgument("empty seed range '" + part + "'");
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad seed list '" + spec + "'");
  }
  if (out.empty()) throw InvalidArgument("seed list is empty");
  return out;
}

std::vector<NamedConfig> read_config_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir);
  std::vector<NamedConfig> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".txt" && ext != ".cfg")) continue;
    out.push_back({entry.path().stem().string(), read_config_file(entry.path().string())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (out.empty()) throw InvalidArgument("no configs in " + dir);
  return out;
}

SuiteRow aggregate(const std::string& config, const std::vector<EpisodeMetrics>& episodes) {
  SuiteRow row;
  row.config = config;
  row.episodes = static_cast<int>(episodes.size());
  std::vector<double> mct, dist;
  for (const auto& m : episodes) {
    mct.push_back(m.mct);
    if (m.success) dist.push_back(m.traversed_distance);
  }
  row.successes = static_cast<int>(dist.size());
  row.sf = row.episodes > 0 ? static_cast<double>(row.successes) / row.episodes : 0.0;
  mean_sd(mct, row.mct_mean, row.mct_sd);
  double sd = 0.0;
  mean_sd(dist, row.distance_mean, sd);
  if (!dist.empty()) {
    row.distance_max = *std::max_element(dist.begin(), dist.end());
    row.distance_min = *std::min_element(dist.begin(), dist.end());
  }
  return row;
}

BenchmarkTable run_suite(const std::vector<std::uint64_t>& seeds, const std::vector<NamedConfig>& configs,
                         RunMode mode, int parallelism, const SuiteProgress& progress) {
  if (seeds.empty() || configs.empty()) throw InvalidArgument("suite needs at least one seed and one config");
  for (const auto& c : configs) c.cfg.validate();
  const std::size_t total = seeds.size() * configs.size();
  BenchmarkTable table;
  table.records.resize(total);
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const auto& nc = configs[i / seeds.size()];
      const Environment env = generate_forest(seeds[i % seeds.size()], ForestParams::from_config(nc.cfg));
      table.records[i] = {nc.name, simulate_episode(env, nc.cfg, mode).metrics};
      if (progress) {
        std::lock_guard<std::mutex> lock(report);
        progress(table.records[i]);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<EpisodeMetrics> eps;
    for (std::size_t s = 0; s < seeds.size(); ++s) eps.push_back(table.records[c * seeds.size() + s].metrics);
    table.rows.push_back(aggregate(configs[c].name, eps));
  }
  return table;
}

void write_table_csv(std::ostream& os, const BenchmarkTable& table) {
  os << "config,episodes,successes,sf,mct_mean_s,mct_sd_s,distance_mean_m,distance_max_m,distance_min_m\n";
  os << std::setprecision(10);
  for (const auto& r : table.rows) {
    os << r.config << ',' << r.episodes << ',' << r.successes << ',' << r.sf << ',' << r.mct_mean << ','
       << r.mct_sd << ',' << r.distance_mean << ',' << r.distance_max << ',' << r.distance_min << '\n';
  }
}

void write_records_json(std::ostream& os, const BenchmarkTable& table) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& rec : table.records) {
    std::ostringstream ss;
    write_metrics_json(ss, rec.metrics);
    nlohmann::ordered_json j;
    j["config"] = rec.config;
    const auto fields = nlohmann::ordered_json::parse(ss.str());
    for (const auto& [k, v] : fields.items()) j[k] = v;
    arr.push_back(j);
  }
  os << arr.dump(2) << '\n';
}

RuntimeBreakdown record_runtime_breakdown(const std::vector<TimingRecord>& logs) {
  std::map<std::string, std::vector<double>> by;
  std::vector<double> cycles;
  for (const auto& r : logs) {
    if (r.module == "cycle")
      cycles.push_back(r.seconds);
    else
      by[r.module].push_back(r.seconds);
  }
  RuntimeBreakdown b;
  if (logs.empty()) return b;
  for (const char* name : kCategories) {
    CategoryStats s;
    s.name = name;
    const auto it = by.find(name);
    if (it != by.end()) {
      s.count = static_cast<int>(it->second.size());
      mean_sd(it->second, s.mean, s.sd);
    }
    b.categories.push_back(s);
  }
  b.cycles = static_cast<int>(cycles.size());
  double sd = 0.0;
  mean_sd(cycles, b.cycle_mean, sd);
  return b;
}

void write_breakdown(std::ostream& os, const RuntimeBreakdown& b) {
  os << "module,count,mean_s,sd_s\n" << std::setprecision(6);
  for (const auto& c : b.categories) os << c.name << ',' << c.count << ',' << c.mean << ',' << c.sd << '\n';
  if (b.cycles > 0) os << "cycle," << b.cycles << ',' << b.cycle_mean << ",\n";
}

}  // namespace reftrack
