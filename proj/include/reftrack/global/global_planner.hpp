#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "reftrack/core/bspline.hpp"
#include "reftrack/decomp/decomposition.hpp"
#include "reftrack/mapping/edt.hpp"
#include "reftrack/solvers/conic.hpp"
#include "reftrack/solvers/lbfgsb.hpp"

namespace reftrack {

struct GlobalConfig {
  double d_z = 0.8;
  double lambda_smooth = 0.2;
  double lambda_obs = 0.6;
  double lambda_feasibility = 0.2;
  double lambda1 = 0.8;
  double lambda2 = 0.8;
  double lambda3 = 0.6;
  Vec3 v_max = Vec3::Constant(0.6);
  Vec3 a_max = Vec3::Constant(1.0);
  double delta_td = 0.05;
  int n_r = 30;
  /// Points held fixed at both window ends; also the J_obs summation offset.
  int fixed_ends = 3;
  /// Per-coordinate box half-width for the minimizer, in units of d_z.
  double box_radius_factor = 2.0;
  /// Largest lateral shift tried when recovery reseeds a blocked run, in units of d_z.
  double detour_radius_factor = 4.0;
  /// Pushing is declared failed when every interior p_j lies this close to c_0 or c_n (0 disables).
  double degeneracy_eps = 1e-3;
  /// Chords passing closer than this to an occupied voxel center cannot be decomposed.
  double chord_clearance = 0.15;
  DecompOptions decomp;
  int parallelism = 1;
  ConicOptions conic;
  LbfgsbOptions lbfgsb = {1e-5, 1e-9, 100, 8};

  void validate() const;
};

class PushFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RecoveryFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maximal run of obstacle-zone window points, with one anchor on each side where available.
struct OccupiedSegment {
  int start_idx = 0;
  int end_idx = 0;
  Vec3List points;

  int size() const { return static_cast<int>(points.size()); }
};

struct ProjectedSegment {
  Vec3List points;
  double objective = 0.0;
};

struct PointGradient {
  Vec3 c_star = Vec3::Zero();
  Vec3 grad = Vec3::Zero();
  double delta_d = 0.0;
  bool active = false;
};

using GradientInfo = std::vector<PointGradient>;

/// Points with clearance strictly below d_z form runs; each run is extended by one point per side.
std::vector<OccupiedSegment> checking_occupied_segments(const TrajectoryWindow& win, const EdtMap& edt,
                                                         double d_z);

/// Breakpoints splitting a segment into clear sub-segments: both ends plus
/// interior points with clearance >= d_z. Returned as segment-local indices.
std::vector<int> clear_breakpoints(const Vec3List& points, const EdtMap& edt, double d_z);

/// Polyhedron indices constraining each point, given consecutive breakpoints.
/// Interior breakpoints belong to both neighbouring sub-segments.
std::vector<std::vector<int>> assign_to_subsegments(int num_points, const std::vector<int>& breakpoints);

/// Pushing problem: min λ1·t1 + λ2·t2 + λ3·t3 with ‖p_0 − c_0‖ ≤ t1, ‖p_n − c_n‖ ≤ t2,
/// ‖p_{k+1} − p_k‖ ≤ s_k, Σ s_k ≤ t3 and each p_j inside its assigned polyhedra.
ProjectedSegment find_pushing_directions(const OccupiedSegment& seg, const std::vector<Polyhedron>& polys,
                                         const std::vector<std::vector<int>>& assignment,
                                         const GlobalConfig& cfg, ConicProgram* dump = nullptr);

/// Per-point gradient estimate toward the projected segment (entries 0 and n inactive).
GradientInfo calculate_gradients(const OccupiedSegment& seg, const ProjectedSegment& proj,
                                 double eps = 1e-6);

struct CostResult {
  double value = 0.0;
  Vec3List grad;
};

CostResult cost_obstacle(const Vec3List& points, const GradientInfo& ginfo, const GlobalConfig& cfg);
CostResult cost_smooth(const Vec3List& points);
CostResult cost_feasibility(const Vec3List& points, const GlobalConfig& cfg);

/// λ_smooth·J_smooth + λ_obs·J_obs + λ_feasibility·J_feasibility.
CostResult total_cost(const Vec3List& points, const GradientInfo& ginfo, const GlobalConfig& cfg);

struct RecoveryResult {
  Vec3List points;  // c_l + p_l
  Vec3List displacement;
  double objective = 0.0;
};

/// Recovery problem: min Σ q_l with A(c_l + p_l) ≤ b, ‖p_l‖ ≤ q_l over explicit polyhedra.
/// Points 1..n-1 are moved; point 0 is the current pose.
RecoveryResult solve_recovery(const Vec3List& points, const std::vector<Polyhedron>& polys,
                              const std::vector<std::vector<int>>& assignment, const ConicOptions& opts = {});

/// Recovery problem with polyhedra from decomposing the whole window.
RecoveryResult dead_zone_recover(const TrajectoryWindow& win, const EdtMap& edt, const GlobalConfig& cfg);

struct RefineTimings {
  double pushing = 0.0;  // decomposition, pushing problem, recovery
  double gradients = 0.0;
  double smoothing_feasibility = 0.0;  // box-constrained minimization
};

struct RefineResult {
  TrajectoryWindow window;
  bool refine_failed = false;
  bool recovered = false;
  std::vector<OccupiedSegment> segments;
  std::vector<ProjectedSegment> projections;
  std::vector<Polyhedron> polyhedra;
  GradientInfo gradients;
  double cost_before = 0.0;
  double cost_after = 0.0;
  LbfgsbStatus solver_status = LbfgsbStatus::ConvergedGrad;
  RefineTimings timings;
};

/// Global planner cycle on a window already prepended with the current pose.
RefineResult refine(const TrajectoryWindow& win, const EdtMap& edt, const GlobalConfig& cfg);

/// One NDJSON record per cycle for offline plotting.
void write_refine_debug(std::ostream& os, int cycle, const TrajectoryWindow& before, const RefineResult& res);

}  // namespace reftrack
