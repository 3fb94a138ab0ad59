#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

using Vec3 = std::array<double, 3>;

/// Prescribed motion of the spatial mesh nodes through time.
struct NodeTrajectory {
  enum class Kind { fixed, rigid_rotation };

  Kind kind = Kind::fixed;
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 axis{0.0, 0.0, 1.0};  // only used in 3D; must be a unit vector
  double omega = 0.0;        // rad per unit time, counterclockwise about `axis`

  static NodeTrajectory rotation(double omega, Vec3 center = {0.0, 0.0, 0.0}, Vec3 axis = {0.0, 0.0, 1.0});
};

struct ExtrusionSpec {
  double t0 = 0.0;
  double tN = 1.0;
  int levels = 1;
  NodeTrajectory trajectory;

  double dt() const { return (tN - t0) / levels; }
};

/// Rotates `point` (n_sd = point.size()) by the trajectory angle accumulated
/// over `elapsed` time.
void rotate_point(const NodeTrajectory& traj, double elapsed, std::span<double> point);

/// Positions of all spatial nodes at time t (flat array, n_sd per node).
std::vector<double> rigid_rotation_positions(const Mesh& spatial, const NodeTrajectory& traj, double t0, double t);

/// Splits the prism spanned by corresponding bottom/top node lists (n+1
/// nodes each) into n+1 simplices of n+2 nodes. Vertices are visited in
/// increasing bottom id, simplex k taking the first n+1-k bottom nodes and
/// the last k+1 top nodes, so prisms sharing a face split it identically.
std::vector<std::vector<int>> decompose_prism(std::span<const int> bottom_ids, std::span<const int> top_ids);

/// Builds a simplicial space-time mesh over [t0, tN] from a spatial mesh
/// moved along `spec.trajectory`. Node (level l, spatial node i) gets id
/// l * n_spatial + i. Mantle facets inherit spatial tags; caps are tagged
/// `bottom` and `top`.
SpaceTimeMesh extrude_simplex_st(const Mesh& spatial, const ExtrusionSpec& spec);

/// Largest uniform time step for which one twisted level keeps every element
/// positively oriented (bisection to 1e-3 relative). Infinity for fixed nodes.
double max_admissible_twist(const Mesh& spatial, const NodeTrajectory& traj);

/// Extrudes a 2D mesh along z into tetrahedral layers (same prism split).
/// Side facets inherit tags; the two caps get `cap_tag`.
Mesh extrude_layers(const Mesh& spatial2d, double z0, double z1, int layers, std::string_view cap_tag);

// Structured generators for verification cases.

/// Rectangle split into 2 * nx * ny triangles; edges tagged xmin/xmax/ymin/ymax.
Mesh make_box_mesh(int nx, int ny, double x0, double x1, double y0, double y1);

/// Annulus with n_r radial and n_theta angular divisions; tags inner/outer.
Mesh make_annulus_mesh(double r_inner, double r_outer, int n_r, int n_theta);

/// Disk made of concentric rings (ring j has 6j nodes); tag `wall`.
Mesh make_disk_mesh(double radius, int rings, Vec3 center = {0.0, 0.0, 0.0});

}  // namespace stfem
