#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stfem/assembly.hpp"
#include "stfem/extrude.hpp"
#include "stfem/mesh.hpp"
#include "stfem/postproc.hpp"
#include "stfem/solver.hpp"

namespace stfem {

enum class CaseKind { stirrer2d, stirrer3d, couette2d, channel2d, manufactured, custom };
enum class RunMode { ust, slab };

struct GeometrySpec {
  enum class Kind { file, box, annulus } kind = Kind::file;
  std::string mesh_file;  // relative paths also resolve against the data directory
  int nx = 8, ny = 8;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double r_inner = 1.0, r_outer = 2.0;
  int n_r = 4, n_theta = 32;
  /// Extra uniform refinement factor applied to box/annulus divisions.
  int refine = 1;
  /// When > 0 a 2D mesh is extruded along z into this many tetrahedral
  /// layers of total `thickness`; the caps are tagged `end_walls`.
  int layers = 0;
  double thickness = 0.1;
};

struct ScenarioSpec {
  std::string name;
  CaseKind kind = CaseKind::custom;
  int space_dim = 2;
  GeometrySpec geometry;
  MaterialParams material;
  double omega = 0.0;  // angular velocity of the rotating part
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 axis{0.0, 0.0, 1.0};
  bool rotate_mesh = false;  // move all nodes rigidly with omega
  double t0 = 0.0;
  double t_end = 1.0;
  RunMode mode = RunMode::ust;
  int levels = 1;    // UST time levels
  double dt = 1.0;   // slab size
  bool convection = true;
  double c_i = 1.0;
  double inflow = 1.0;  // channel centerline velocity
  bool refine_time = true;  // refine() also refines levels / dt
  NewtonConfig newton;
  NewtonConfig slab_newton;

  // Overrides for custom scenarios; the builtin cases derive these from the
  // parameters above.
  std::optional<BCSpec> custom_bcs;
  VectorField custom_force;
  ExactSolution custom_exact;

  // Output requests.
  std::vector<double> probe_points;  // spatial coordinates, n_sd per point
  double probe_time = -1.0;          // negative: t_end
  bool write_vtk = true;
};

/// Registry of the builtin cases by name.
std::map<std::string, ScenarioSpec> builtin_cases();
ScenarioSpec builtin_case(const std::string& name);

std::string to_string(CaseKind k);
std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

/// Resolved inputs of a scenario.
Mesh load_spatial_mesh(const ScenarioSpec& spec);
BCSpec boundary_conditions(const ScenarioSpec& spec);
VectorField body_force(const ScenarioSpec& spec);
/// Exact (u, p) when the case has one; empty otherwise.
ExactSolution exact_solution(const ScenarioSpec& spec);
/// Returns true when the exact pressure is meaningful for error norms.
bool exact_pressure_known(const ScenarioSpec& spec);
NodeTrajectory mesh_trajectory(const ScenarioSpec& spec);
Physics physics(const ScenarioSpec& spec);
int slab_count(const ScenarioSpec& spec);

// Probe locations around the builtin four-bladed stirrer, in the lab frame at
// time t. Side probes: 16 points 0.1 off each blade face at 60% and 90% of the
// blade length. Tip probes: one point 0.15 radially beyond each blade tip.
// 3D cases put the points at mid thickness.
std::vector<Vec3> stirrer_side_probes(const ScenarioSpec& spec, double t);
std::vector<Vec3> stirrer_tip_probes(const ScenarioSpec& spec, double t);
std::vector<double> flatten_points(const std::vector<Vec3>& pts, int nsd);

struct RunResult {
  RunMode mode = RunMode::ust;
  /// Space-time simplex mesh carrying the solution. In slab mode this is the
  /// stack of Kuhn-split slabs with duplicated nodes at interior levels.
  Mesh st_mesh;
  std::vector<double> field;  // n_sd + 1 per node
  int components = 0;
  std::vector<NewtonResult> newton;  // one per nonlinear solve
  double divergence_l2 = 0.0;         // ||div u||_{L2(Q)}
  double t0 = 0.0;
  double t_end = 0.0;
  int slabs = 0;
  int unknowns = 0;  // per nonlinear solve (largest)
  bool converged() const;
};

RunResult run_ust(const ScenarioSpec& spec);
RunResult run_slab(const ScenarioSpec& spec);
RunResult run(const ScenarioSpec& spec, RunMode mode);

/// L2 norm of the spatial divergence of the velocity over the space-time mesh.
double divergence_norm(const Mesh& st, std::span<const double> field, int components);

struct ErrorReport {
  double velocity = 0.0;  // absolute L2 error
  double velocity_rel = 0.0;
  double pressure = 0.0;  // after removing the mean offset
  double pressure_rel = 0.0;
};
/// Errors against the exact solution on the slice at `t` (t_end if < 0).
ErrorReport solution_error(const ScenarioSpec& spec, const RunResult& r, double t = -1.0);

/// The spec with space and time refined by `factor` (box/annulus divisions,
/// UST levels and slab size).
ScenarioSpec refine(const ScenarioSpec& spec, int factor);

struct ConvergenceRow {
  int factor = 1;
  double h = 0.0;
  int unknowns = 0;
  ErrorReport error;
  double order_u = 0.0;  // log(e_prev / e) / log(f / f_prev); 0 on the first row
  double order_p = 0.0;
  int newton_iterations = 0;
};

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, RunMode mode,
                                              const std::vector<int>& factors);
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);

/// Writes result.dat, newton_trace.csv, slice_final.vtk (when requested) and
/// probes.csv (when probe points exist) into `dir`.
void write_outputs(const ScenarioSpec& spec, const RunResult& r, const std::filesystem::path& dir);

}  // namespace stfem
