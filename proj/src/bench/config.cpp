#include "reftrack/bench/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <variant>
#include <vector>

namespace reftrack {

namespace {

using Field = std::variant<double*, int*, Vec3*>;

std::vector<std::pair<const char*, Field>> fields(BenchConfig& c) {
  return {
      {"delta_td", &c.delta_td},
      {"delta_tc", &c.delta_tc},
      {"d_z", &c.d_z},
      {"lambda_smooth", &c.lambda_smooth},
      {"lambda_obs", &c.lambda_obs},
      {"lambda_feasibility", &c.lambda_feasibility},
      {"lambda1", &c.lambda1},
      {"lambda2", &c.lambda2},
      {"lambda3", &c.lambda3},
      {"v_max", &c.v_max},
      {"a_max", &c.a_max},
      {"omega_max", &c.omega_max},
      {"n_p", &c.n_p},
      {"n_r", &c.n_r},
      {"update_range", &c.update_range},
      {"resolution", &c.resolution},
      {"q_pos", &c.q_pos},
      {"q_yaw", &c.q_yaw},
      {"r_v", &c.r_v},
      {"r_omega", &c.r_omega},
      {"goal_tol", &c.goal_tol},
      {"collision_radius", &c.collision_radius},
      {"rate_global", &c.rate_global},
      {"rate_local", &c.rate_local},
      {"ref_speed", &c.ref_speed},
      {"timeout", &c.timeout},
      {"stall_window", &c.stall_window},
      {"stall_distance", &c.stall_distance},
      {"edt_crop", &c.edt_crop},
      {"max_lag", &c.max_lag},
      {"max_obstacles", &c.max_obstacles},
      {"sqp_max_iter", &c.sqp_max_iter},
      {"n_obstacles", &c.n_obstacles},
      {"radius_min", &c.radius_min},
      {"radius_max", &c.radius_max},
      {"extent", &c.extent},
      {"start", &c.start},
      {"goal", &c.goal},
  };
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (trim(s.substr(used)) != "") throw std::invalid_argument(s);
  return v;
}

struct Assign {
  const std::string& text;
  void operator()(double* p) const { *p = to_double(text); }
  void operator()(int* p) const {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (trim(text.substr(used)) != "") throw std::invalid_argument(text);
    *p = v;
  }
  void operator()(Vec3* p) const {
    std::istringstream ss(text);
    std::string part;
    int k = 0;
    Vec3 v;
    while (std::getline(ss, part, ',')) {
      if (k >= 3) throw std::invalid_argument(text);
      v[k++] = to_double(trim(part));
    }
    if (k != 3) throw std::invalid_argument(text);
    *p = v;
  }
};

struct Print {
  std::ostream& os;
  void operator()(const double* p) const { os << *p; }
  void operator()(const int* p) const { os << *p; }
  void operator()(const Vec3* p) const { os << p->x() << ',' << p->y() << ',' << p->z(); }
};

}  // namespace

void BenchConfig::validate() const {
  global().validate();
  nmpc().validate();
  if (!(update_range > 0.0) || !(resolution > 0.0)) throw InvalidArgument("update_range and resolution must be positive");
  if (!(goal_tol > 0.0) || !(collision_radius >= 0.0)) throw InvalidArgument("bad goal tolerance or collision radius");
  if (!(rate_global > 0.0) || !(rate_local > 0.0)) throw InvalidArgument("rates must be positive");
  if (!(ref_speed > 0.0) || !(timeout > 0.0) || !(edt_crop > d_z) || !(max_lag > 0.0)) throw InvalidArgument("bad harness settings");
  if (!(stall_window >= 0.0) || !(stall_distance >= 0.0)) throw InvalidArgument("bad stall settings");
  if (n_obstacles < 0 || !(radius_min > 0.0) || radius_max < radius_min) throw InvalidArgument("bad forest settings");
  if ((extent.array() <= 0.0).any()) throw InvalidArgument("extent must be positive");
  for (const Vec3* p : {&start, &goal})
    if ((p->array() < 0.0).any() || (p->array() > extent.array()).any())
      throw InvalidArgument("start and goal must lie inside the extent");
}

GlobalConfig BenchConfig::global() const {
  GlobalConfig g;
  // Nearest-voxel lookups can read up to half a voxel diagonal high; the
  // reference is pushed that much further so the NMPC can reach it.
  g.d_z = d_z + 0.5 * std::sqrt(3.0) * resolution;
  g.lambda_smooth = lambda_smooth;
  g.lambda_obs = lambda_obs;
  g.lambda_feasibility = lambda_feasibility;
  g.lambda1 = lambda1;
  g.lambda2 = lambda2;
  g.lambda3 = lambda3;
  g.v_max = Vec3::Constant(v_max);
  g.a_max = Vec3::Constant(a_max);
  g.delta_td = delta_td;
  g.n_r = n_r;
  return g;
}

NmpcConfig BenchConfig::nmpc() const {
  NmpcConfig n;
  n.n_p = n_p;
  n.delta_tc = delta_tc;
  n.delta_td = delta_td;
  n.d_z = d_z;
  n.v_max = v_max;
  n.omega_max = omega_max;
  n.q = Vec4(q_pos, q_pos, q_pos, q_yaw);
  n.r = Vec4(r_v, r_v, r_v, r_omega);
  n.state_lo = Vec3::Zero();
  n.state_hi = extent;
  n.max_obstacles = max_obstacles;
  n.max_iter = sqp_max_iter;
  return n;
}

BenchConfig parse_config(std::istream& is) {
  BenchConfig cfg;
  auto table = fields(cfg);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return key == f.first; });
    if (it == table.end()) throw InvalidArgument("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      std::visit(Assign{value}, it->second);
    } catch (const std::exception&) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

BenchConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  return parse_config(in);
}

void write_config(std::ostream& os, const BenchConfig& cfg) {
  BenchConfig copy = cfg;
  os << std::setprecision(17);
  for (const auto& [key, field] : fields(copy)) {
    os << key << '=';
    std::visit(Print{os}, field);
    os << '\n';
  }
}

}  // namespace reftrack
