#include "stfem/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "stfem/discretization.hpp"
#include "stfem/error.hpp"
#include "stfem/mesh_io.hpp"

namespace stfem {

namespace {

constexpr double kPi = std::numbers::pi;

// Builtin stirrer cross: blade half thickness and horizontal / vertical
// half spans (see tools/gen_stirrer_mesh.py).
constexpr double kBladeHalfThick = 0.15;
constexpr double kBladeSpanH = 2.0;
constexpr double kBladeSpanV = 2.6;

struct Blade {
  Vec3 dir;  // unit vector along the blade
  double length;
};

constexpr std::array<Blade, 4> kBlades = {{{{1.0, 0.0, 0.0}, kBladeSpanH},
                                           {{0.0, 1.0, 0.0}, kBladeSpanV},
                                           {{-1.0, 0.0, 0.0}, kBladeSpanH},
                                           {{0.0, -1.0, 0.0}, kBladeSpanV}}};

std::vector<Vec3> to_lab_frame(const ScenarioSpec& spec, std::vector<Vec3> pts, double t) {
  const double a = spec.omega * (t - spec.t0);
  const double c = std::cos(a), s = std::sin(a);
  const double z = spec.space_dim == 3 ? 0.5 * spec.geometry.thickness : 0.0;
  for (Vec3& p : pts) {
    const double x = p[0], y = p[1];
    p = {spec.center[0] + c * x - s * y, spec.center[1] + s * x + c * y, z};
  }
  return pts;
}

ScenarioSpec stirrer_base() {
  ScenarioSpec s;
  s.geometry.kind = GeometrySpec::Kind::file;
  s.material = {1.0, 0.03382};
  s.omega = 250.0 * kPi / 3.0;
  s.rotate_mesh = true;
  s.levels = 17;
  s.dt = 0.00012;
  s.t_end = 17 * 0.00012;
  return s;
}

std::filesystem::path resolve_data_path(const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute() || std::filesystem::exists(p)) return p;
#ifdef STFEM_DEFAULT_DATA_DIR
  const std::filesystem::path d = std::filesystem::path(STFEM_DEFAULT_DATA_DIR) / p;
  if (std::filesystem::exists(d)) return d;
#endif
  if (const char* env = std::getenv("STFEM_DATA_DIR")) {
    const std::filesystem::path e = std::filesystem::path(env) / p;
    if (std::filesystem::exists(e)) return e;
  }
  return p;
}

void check_spec(const ScenarioSpec& s) {
  if (!(s.t_end > s.t0)) throw ConfigurationError("t_end must exceed t0");
  if (s.levels < 1) throw ConfigurationError("levels must be >= 1");
  if (!(s.dt > 0.0)) throw ConfigurationError("dt must be positive");
  if (s.space_dim != 2 && s.space_dim != 3) throw ConfigurationError("space_dim must be 2 or 3");
  if (!(s.material.rho > 0.0) || s.material.mu < 0.0) throw ConfigurationError("need rho > 0 and mu >= 0");
}

// Poiseuille profile of the channel case: u = 4 U y (1 - y) / H^2 scaled to
// the box height.
struct Channel {
  double y0, y1, u_max, mu, length_end;
  double profile(double y) const {
    const double h = y1 - y0;
    const double s = (y - y0) / h;
    return 4.0 * u_max * s * (1.0 - s);
  }
  double pressure(double x) const {
    const double h = y1 - y0;
    return 8.0 * mu * u_max / (h * h) * (length_end - x);
  }
};

Channel channel_of(const ScenarioSpec& s) {
  return {s.geometry.y0, s.geometry.y1, s.inflow, s.material.mu, s.geometry.x1};
}

}  // namespace

std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::stirrer2d: return "stirrer2d";
    case CaseKind::stirrer3d: return "stirrer3d";
    case CaseKind::couette2d: return "couette2d";
    case CaseKind::channel2d: return "channel2d";
    case CaseKind::manufactured: return "manufactured";
    case CaseKind::custom: break;
  }
  return "custom";
}

std::string to_string(RunMode m) { return m == RunMode::ust ? "ust" : "slab"; }

RunMode parse_run_mode(const std::string& s) {
  if (s == "ust") return RunMode::ust;
  if (s == "slab") return RunMode::slab;
  throw ConfigurationError("unknown mode '" + s + "' (expected ust or slab)");
}

std::map<std::string, ScenarioSpec> builtin_cases() {
  std::map<std::string, ScenarioSpec> cases;

  ScenarioSpec s2 = stirrer_base();
  s2.name = "stirrer2d";
  s2.kind = CaseKind::stirrer2d;
  s2.geometry.mesh_file = "stirrer2d.stmesh";
  s2.probe_points = flatten_points(stirrer_side_probes(s2, s2.t_end), 2);
  cases[s2.name] = s2;

  ScenarioSpec s3 = stirrer_base();
  s3.name = "stirrer3d";
  s3.kind = CaseKind::stirrer3d;
  s3.space_dim = 3;
  s3.geometry.mesh_file = "stirrer2d_coarse.stmesh";
  s3.geometry.layers = 3;
  s3.geometry.thickness = 0.1;
  s3.probe_points = flatten_points(stirrer_side_probes(s3, s3.t_end), 3);
  s3.newton.linear.method = s3.slab_newton.linear.method = LinearMethod::direct_lu;
  cases[s3.name] = s3;

  ScenarioSpec c;
  c.name = "couette2d";
  c.kind = CaseKind::couette2d;
  c.geometry.kind = GeometrySpec::Kind::annulus;
  c.geometry.r_inner = 1.0;
  c.geometry.r_outer = 2.0;
  c.geometry.n_r = 4;
  c.geometry.n_theta = 24;
  c.material = {1.0, 0.1};
  c.omega = 1.0;
  c.t_end = 10.0;
  c.levels = 20;
  c.dt = 0.5;
  c.refine_time = false;
  c.probe_points = {1.5, 0.0};
  cases[c.name] = c;

  ScenarioSpec ch;
  ch.name = "channel2d";
  ch.kind = CaseKind::channel2d;
  ch.geometry.kind = GeometrySpec::Kind::box;
  ch.geometry.nx = 16;
  ch.geometry.ny = 8;
  ch.geometry.x1 = 4.0;
  ch.material = {1.0, 1.0};
  ch.t_end = 60000.0;
  ch.dt = 10000.0;
  ch.levels = 6;
  ch.probe_points = {2.0, 0.5};
  cases[ch.name] = ch;

  ScenarioSpec m;
  m.name = "manufactured";
  m.kind = CaseKind::manufactured;
  m.geometry.kind = GeometrySpec::Kind::box;
  m.geometry.nx = 8;
  m.geometry.ny = 8;
  m.material = {1.0, 0.01};
  m.t_end = 0.5;
  m.levels = 4;
  m.dt = 0.125;
  m.probe_points = {0.25, 0.25};
  cases[m.name] = m;

  return cases;
}

ScenarioSpec builtin_case(const std::string& name) {
  auto cases = builtin_cases();
  auto it = cases.find(name);
  if (it == cases.end()) throw ConfigurationError("unknown case '" + name + "'");
  return it->second;
}

Mesh load_spatial_mesh(const ScenarioSpec& spec) {
  const GeometrySpec& g = spec.geometry;
  const int f = std::max(1, g.refine);
  Mesh m;
  switch (g.kind) {
    case GeometrySpec::Kind::box: m = make_box_mesh(g.nx * f, g.ny * f, g.x0, g.x1, g.y0, g.y1); break;
    case GeometrySpec::Kind::annulus: m = make_annulus_mesh(g.r_inner, g.r_outer, g.n_r * f, g.n_theta * f); break;
    case GeometrySpec::Kind::file: {
      if (g.mesh_file.empty()) throw ConfigurationError("scenario '" + spec.name + "' has no mesh file");
      m = read_mesh(resolve_data_path(g.mesh_file));
      break;
    }
  }
  if (g.layers > 0 && m.dim() == 2) m = extrude_layers(m, 0.0, g.thickness, g.layers, "end_walls");
  if (m.dim() != spec.space_dim)
    throw ConfigurationError("mesh dimension " + std::to_string(m.dim()) + " does not match space_dim " +
                             std::to_string(spec.space_dim));
  return m;
}

BCSpec boundary_conditions(const ScenarioSpec& spec) {
  if (spec.custom_bcs) return *spec.custom_bcs;
  const VectorField zero = constant_field({0.0, 0.0, 0.0});
  BCSpec b;
  switch (spec.kind) {
    case CaseKind::stirrer2d:
    case CaseKind::stirrer3d:
      b.dirichlet.push_back({"stirrer", rigid_body_velocity(spec.omega, spec.center, spec.axis)});
      b.dirichlet.push_back({"outer_wall", zero});
      if (spec.kind == CaseKind::stirrer3d) b.dirichlet.push_back({"end_walls", zero});
      b.initial = zero;
      break;
    case CaseKind::couette2d:
      b.dirichlet.push_back({"inner", rigid_body_velocity(spec.omega, spec.center, spec.axis)});
      b.dirichlet.push_back({"outer", zero});
      b.initial = zero;
      break;
    case CaseKind::channel2d: {
      const Channel c = channel_of(spec);
      const VectorField inflow = [c](const Vec3& x, double) { return Vec3{c.profile(x[1]), 0.0, 0.0}; };
      b.dirichlet.push_back({"ymin", zero});
      b.dirichlet.push_back({"ymax", zero});
      b.dirichlet.push_back({"xmin", inflow});
      // Outlet traction of the exact Poiseuille flow: sigma n with n = e_x.
      b.neumann.push_back({"xmax", [c](const Vec3& x, double) {
                             const double h = c.y1 - c.y0;
                             const double s = (x[1] - c.y0) / h;
                             const double dudy = 4.0 * c.u_max * (1.0 - 2.0 * s) / h;
                             return Vec3{-c.pressure(c.length_end), c.mu * dudy, 0.0};
                           }});
      b.initial = inflow;
      break;
    }
    case CaseKind::manufactured: {
      const ExactSolution ex = exact_solution(spec);
      const VectorField u = [ex](const Vec3& x, double t) {
        const auto v = ex(x, t);
        return Vec3{v[0], v[1], 0.0};
      };
      for (const char* tag : {"xmin", "xmax", "ymin", "ymax"}) b.dirichlet.push_back({tag, u});
      b.initial = u;
      break;
    }
    case CaseKind::custom: throw ConfigurationError("custom scenario needs explicit boundary conditions");
  }
  return b;
}

VectorField body_force(const ScenarioSpec& spec) {
  if (spec.custom_force) return spec.custom_force;
  if (spec.kind != CaseKind::manufactured) return {};
  const double rho = spec.material.rho;
  const double mu = spec.material.mu;
  const double conv = spec.convection ? 1.0 : 0.0;
  // f = rho (du/dt + u . grad u) - mu lap u + grad p for
  // u = a(t) (sin(pi x) cos(pi y), -cos(pi x) sin(pi y)),
  // p = a(t) sin(pi x) sin(pi y), a = 1 + t.
  return [rho, mu, conv](const Vec3& x, double t) {
    const double a = 1.0 + t;
    const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
    const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    const double f1 = rho * (sx * cy + conv * a * a * 0.5 * kPi * std::sin(2.0 * kPi * x[0])) +
                      2.0 * kPi * kPi * mu * a * sx * cy + a * kPi * cx * sy;
    const double f2 = rho * (-cx * sy + conv * a * a * 0.5 * kPi * std::sin(2.0 * kPi * x[1])) -
                      2.0 * kPi * kPi * mu * a * cx * sy + a * kPi * sx * cy;
    return Vec3{f1, f2, 0.0};
  };
}

ExactSolution exact_solution(const ScenarioSpec& spec) {
  if (spec.custom_exact) return spec.custom_exact;
  switch (spec.kind) {
    case CaseKind::manufactured:
      return [](const Vec3& x, double t) {
        const double a = 1.0 + t;
        const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
        const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
        return std::array<double, 4>{a * sx * cy, -a * cx * sy, a * sx * sy, 0.0};
      };
    case CaseKind::couette2d: {
      const double ri = spec.geometry.r_inner, ro = spec.geometry.r_outer, w = spec.omega;
      const Vec3 c = spec.center;
      return [ri, ro, w, c](const Vec3& x, double) {
        const double dx = x[0] - c[0], dy = x[1] - c[1];
        const double r = std::hypot(dx, dy);
        const double ut = w * ri * ri / (ro * ro - ri * ri) * (ro * ro / r - r);
        return std::array<double, 4>{-ut * dy / r, ut * dx / r, 0.0, 0.0};
      };
    }
    case CaseKind::channel2d: {
      const Channel c = channel_of(spec);
      return [c](const Vec3& x, double) { return std::array<double, 4>{c.profile(x[1]), 0.0, c.pressure(x[0]), 0.0}; };
    }
    default: return {};
  }
}

bool exact_pressure_known(const ScenarioSpec& spec) {
  return spec.kind == CaseKind::manufactured || spec.kind == CaseKind::channel2d ||
         (spec.kind == CaseKind::custom && spec.custom_exact);
}

std::vector<Vec3> stirrer_side_probes(const ScenarioSpec& spec, double t) {
  const double off = kBladeHalfThick + 0.1;
  std::vector<Vec3> pts;
  for (const Blade& b : kBlades) {
    const Vec3 nrm{-b.dir[1], b.dir[0], 0.0};
    for (double frac : {0.6, 0.9})
      for (double side : {1.0, -1.0})
        pts.push_back({frac * b.length * b.dir[0] + side * off * nrm[0],
                       frac * b.length * b.dir[1] + side * off * nrm[1], 0.0});
  }
  return to_lab_frame(spec, std::move(pts), t);
}

std::vector<Vec3> stirrer_tip_probes(const ScenarioSpec& spec, double t) {
  std::vector<Vec3> pts;
  for (const Blade& b : kBlades)
    pts.push_back({(b.length + 0.15) * b.dir[0], (b.length + 0.15) * b.dir[1], 0.0});
  return to_lab_frame(spec, std::move(pts), t);
}

std::vector<double> flatten_points(const std::vector<Vec3>& pts, int nsd) {
  std::vector<double> out;
  out.reserve(pts.size() * static_cast<std::size_t>(nsd));
  for (const Vec3& p : pts) out.insert(out.end(), p.begin(), p.begin() + nsd);
  return out;
}

NodeTrajectory mesh_trajectory(const ScenarioSpec& spec) {
  if (!spec.rotate_mesh || spec.omega == 0.0) return {};
  return NodeTrajectory::rotation(spec.omega, spec.center, spec.axis);
}

Physics physics(const ScenarioSpec& spec) {
  Physics p;
  p.material = spec.material;
  p.body_force = body_force(spec);
  p.convection = spec.convection;
  p.c_i = spec.c_i;
  return p;
}

int slab_count(const ScenarioSpec& spec) {
  const double n = (spec.t_end - spec.t0) / spec.dt;
  const auto k = std::llround(n);
  if (k < 1 || std::abs(n - static_cast<double>(k)) > 1e-6 * std::max(1.0, n))
    throw ConfigurationError("t_end - t0 must be a whole multiple of dt");
  return static_cast<int>(k);
}

bool RunResult::converged() const {
  return std::all_of(newton.begin(), newton.end(), [](const NewtonResult& n) { return n.converged(); });
}

double divergence_norm(const Mesh& st, std::span<const double> field, int components) {
  const int nsd = st.dim() - 1;
  double sum = 0.0;
  for (int e = 0; e < st.num_elements(); ++e) {
    const Eigen::MatrixXd g = basis_gradients(st, e);
    auto ids = st.element(e);
    double div = 0.0;
    for (int a = 0; a <= st.dim(); ++a)
      for (int i = 0; i < nsd; ++i) div += g(a, i) * field[static_cast<std::size_t>(ids[a]) * components + i];
    sum += element_measure(st, e) * div * div;
  }
  return std::sqrt(sum);
}

RunResult run_ust(const ScenarioSpec& spec) {
  check_spec(spec);
  const Mesh spatial = load_spatial_mesh(spec);
  ExtrusionSpec ex;
  ex.t0 = spec.t0;
  ex.tN = spec.t_end;
  ex.levels = spec.levels;
  ex.trajectory = mesh_trajectory(spec);
  SpaceTimeMesh st = extrude_simplex_st(spatial, ex);
  const Discretization disc = discretize_ust(st);
  const Assembler assembler(disc, physics(spec), boundary_conditions(spec));
  AssemblerProblem problem(assembler);

  RunResult r;
  r.mode = RunMode::ust;
  r.components = assembler.block_size();
  r.unknowns = assembler.num_dofs();
  r.newton.push_back(newton_solve(problem, assembler.initial_guess(), spec.newton));
  r.field = r.newton.back().solution;
  r.st_mesh = std::move(st.mesh);
  r.t0 = spec.t0;
  r.t_end = spec.t_end;
  r.slabs = 0;
  r.divergence_l2 = divergence_norm(r.st_mesh, r.field, r.components);
  return r;
}

RunResult run_slab(const ScenarioSpec& spec) {
  check_spec(spec);
  const Mesh spatial = load_spatial_mesh(spec);
  const int n_slabs = slab_count(spec);
  const double dt = (spec.t_end - spec.t0) / n_slabs;
  const NodeTrajectory traj = mesh_trajectory(spec);
  const int nsd = spatial.dim();
  const int bs = nsd + 1;
  const int n = spatial.num_nodes();
  const BCSpec bcs = boundary_conditions(spec);
  const Physics ph = physics(spec);

  // State carried between slabs: (u, p) at the current level.
  std::vector<double> pos_b = rigid_rotation_positions(spatial, traj, spec.t0, spec.t0);
  std::vector<double> state(static_cast<std::size_t>(n) * bs, 0.0);
  if (bcs.initial) {
    for (int i = 0; i < n; ++i) {
      Vec3 x{0.0, 0.0, 0.0};
      for (int c = 0; c < nsd; ++c) x[c] = pos_b[i * nsd + c];
      const Vec3 v = bcs.initial(x, spec.t0);
      for (int c = 0; c < nsd; ++c) state[i * bs + c] = v[c];
    }
  }

  RunResult r;
  r.mode = RunMode::slab;
  r.components = bs;
  r.t0 = spec.t0;
  r.t_end = spec.t_end;
  r.slabs = n_slabs;
  std::vector<double> coords;
  std::vector<int> cells;
  std::vector<int> bottom(nsd + 1), top(nsd + 1);

  for (int s = 0; s < n_slabs; ++s) {
    const double tb = spec.t0 + s * dt;
    const double tt = s + 1 == n_slabs ? spec.t_end : spec.t0 + (s + 1) * dt;
    std::vector<double> pos_t = rigid_rotation_positions(spatial, traj, spec.t0, tt);
    const Discretization disc = discretize_slab(spatial, pos_b, pos_t, tb, tt);
    Assembler assembler(disc, ph, bcs);
    std::vector<double> prev(static_cast<std::size_t>(n) * nsd);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < nsd; ++c) prev[i * nsd + c] = state[i * bs + c];
    assembler.set_previous_state(std::move(prev));
    std::vector<double> x0(assembler.num_dofs());
    std::copy(state.begin(), state.end(), x0.begin());
    std::copy(state.begin(), state.end(), x0.begin() + static_cast<std::ptrdiff_t>(state.size()));
    assembler.apply_constraints(x0);
    AssemblerProblem problem(assembler);
    if (spec.slab_newton.log) std::fprintf(stderr, "slab %d/%d t=[%.6g, %.6g]\n", s + 1, n_slabs, tb, tt);
    r.newton.push_back(newton_solve(problem, std::move(x0), spec.slab_newton));
    const auto& sol = r.newton.back().solution;
    r.unknowns = std::max(r.unknowns, assembler.num_dofs());

    const int base = static_cast<int>(coords.size()) / (nsd + 1);
    coords.insert(coords.end(), disc.coords.begin(), disc.coords.end());
    r.field.insert(r.field.end(), sol.begin(), sol.end());
    for (int e = 0; e < spatial.num_elements(); ++e) {
      auto ids = spatial.element(e);
      for (int k = 0; k <= nsd; ++k) {
        bottom[k] = base + ids[k];
        top[k] = base + n + ids[k];
      }
      for (const auto& simplex : decompose_prism(bottom, top)) cells.insert(cells.end(), simplex.begin(), simplex.end());
    }
    std::copy(sol.begin() + static_cast<std::ptrdiff_t>(n) * bs, sol.end(), state.begin());
    pos_b = std::move(pos_t);
  }
  r.st_mesh = Mesh(nsd + 1, std::move(coords), std::move(cells), {}, spatial.tag_names());
  r.divergence_l2 = divergence_norm(r.st_mesh, r.field, r.components);
  return r;
}

RunResult run(const ScenarioSpec& spec, RunMode mode) { return mode == RunMode::ust ? run_ust(spec) : run_slab(spec); }

ErrorReport solution_error(const ScenarioSpec& spec, const RunResult& r, double t) {
  const ExactSolution ex = exact_solution(spec);
  if (!ex) throw ConfigurationError("scenario '" + spec.name + "' has no exact solution");
  const double when = t < 0.0 ? r.t_end : t;
  const SliceResult slice = slice_at_time(r.st_mesh, r.field, r.components, when);
  const int nsd = slice.nsd;
  const L2Error e = l2_error(slice, ex, nsd);
  ErrorReport rep;
  double eu = 0.0, nu = 0.0;
  for (int c = 0; c < nsd; ++c) {
    eu += e.error[c] * e.error[c];
    nu += e.norm[c] * e.norm[c];
  }
  rep.velocity = std::sqrt(eu);
  rep.velocity_rel = nu > 0.0 ? rep.velocity / std::sqrt(nu) : rep.velocity;
  if (exact_pressure_known(spec)) {
    rep.pressure = e.error[nsd];
    rep.pressure_rel = e.norm[nsd] > 0.0 ? rep.pressure / e.norm[nsd] : rep.pressure;
  }
  return rep;
}

ScenarioSpec refine(const ScenarioSpec& spec, int factor) {
  if (factor < 1) throw ConfigurationError("refinement factor must be >= 1");
  ScenarioSpec s = spec;
  s.geometry.refine = std::max(1, spec.geometry.refine) * factor;
  if (spec.refine_time) {
    s.levels = spec.levels * factor;
    s.dt = spec.dt / factor;
  }
  return s;
}

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec& spec, RunMode mode,
                                              const std::vector<int>& factors) {
  if (spec.geometry.kind == GeometrySpec::Kind::file)
    throw ConfigurationError("convergence studies need a generated (box or annulus) geometry");
  std::vector<ConvergenceRow> rows;
  for (int f : factors) {
    const ScenarioSpec s = refine(spec, f);
    const RunResult r = run(s, mode);
    ConvergenceRow row;
    row.factor = f;
    const auto& g = s.geometry;
    row.h = g.kind == GeometrySpec::Kind::box ? (g.x1 - g.x0) / (g.nx * g.refine)
                                              : (g.r_outer - g.r_inner) / (g.n_r * g.refine);
    row.unknowns = r.unknowns;
    row.error = solution_error(s, r);
    for (const auto& n : r.newton) row.newton_iterations = std::max(row.newton_iterations, n.iterations);
    if (!rows.empty()) {
      const auto& prev = rows.back();
      const double ratio = std::log(static_cast<double>(f) / prev.factor);
      row.order_u = std::log(prev.error.velocity / row.error.velocity) / ratio;
      if (prev.error.pressure > 0.0 && row.error.pressure > 0.0)
        row.order_p = std::log(prev.error.pressure / row.error.pressure) / ratio;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "factor,h,unknowns,error_u,rel_error_u,error_p,rel_error_p,order_u,order_p,newton_iterations\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.factor << ',' << r.h << ',' << r.unknowns << ',' << r.error.velocity << ',' << r.error.velocity_rel << ','
       << r.error.pressure << ',' << r.error.pressure_rel << ',' << r.order_u << ',' << r.order_p << ','
       << r.newton_iterations << '\n';
}

void write_outputs(const ScenarioSpec& spec, const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
  write_result(dir / "result.dat", r.st_mesh, NodalField{r.components, r.field});

  std::ofstream trace(dir / "newton_trace.csv");
  if (!trace) throw IoFailure("cannot write " + (dir / "newton_trace.csv").string());
  trace << "solve,iter,residual\n" << std::setprecision(10);
  for (std::size_t s = 0; s < r.newton.size(); ++s)
    for (std::size_t k = 0; k < r.newton[s].residual_norms.size(); ++k)
      trace << s << ',' << k << ',' << r.newton[s].residual_norms[k] << '\n';

  if (spec.write_vtk) export_vtk(slice_at_time(r.st_mesh, r.field, r.components, r.t_end), (dir / "slice_final.vtk").string());

  const int nsd = r.components - 1;
  if (!spec.probe_points.empty()) {
    const double t = spec.probe_time < 0.0 ? r.t_end : spec.probe_time;
    std::vector<double> pts;
    for (std::size_t i = 0; i + nsd <= spec.probe_points.size(); i += nsd) {
      pts.insert(pts.end(), spec.probe_points.begin() + static_cast<std::ptrdiff_t>(i),
                 spec.probe_points.begin() + static_cast<std::ptrdiff_t>(i + nsd));
      pts.push_back(t);
    }
    const auto vals = probe(r.st_mesh, r.field, r.components, pts);
    std::ofstream os(dir / "probes.csv");
    if (!os) throw IoFailure("cannot write probes.csv");
    write_probe_csv(os, nsd, pts, vals);
  }
}

}  // namespace stfem
