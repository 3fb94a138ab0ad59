#pragma once

#include <filesystem>
#include <iosfwd>

#include "stfem/scenario.hpp"

namespace stfem {

// Scenario files are line oriented `key = value` text with optional
// `[section]` headers; `#` and `;` start comments. `case` (in [scenario])
// selects the builtin case whose defaults the other keys override.
//
//   [scenario]  case, name, mode (ust | slab)
//   [mesh]      file, nx, ny, x0, x1, y0, y1, r_inner, r_outer, n_r, n_theta,
//               refine, layers, thickness
//   [material]  rho, mu
//   [motion]    omega, center (x y [z]), axis (x y z), rotate_mesh
//   [time]      t0, t_end, levels, dt
//   [physics]   convection, c_i, inflow
//   [solver]    abs_tol, rel_tol, max_iter, linesearch (none | backtracking),
//               linear_method (gmres_restarted | direct_lu), restart,
//               max_krylov_iter, lin_rel_tol,
//               preconditioner (ilu0 | jacobi_block | none)
//   [output]    probes (flat list of spatial coordinates), probe_time, vtk
//
// Stirrer defaults: rho = 1.0, mu = 0.03382, omega = 250 pi / 3,
// dt = 0.00012, levels = 17.

ScenarioSpec read_config(std::istream& in);
ScenarioSpec read_config(const std::filesystem::path& path);

}  // namespace stfem
