#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfem/extrude.hpp"
#include "stfem/mesh.hpp"

namespace stfem {

/// Spatial mesh cut from a space-time mesh at one time, with the field
/// interpolated to its vertices. Vertices are not shared between cells.
struct SliceResult {
  int nsd = 2;
  double time = 0.0;
  int components = 0;
  std::vector<double> coords;  // nsd per vertex
  std::vector<int> cells;      // nsd + 1 per cell, positively oriented
  std::vector<double> field;   // `components` per vertex

  int num_vertices() const noexcept { return nsd == 0 ? 0 : static_cast<int>(coords.size()) / nsd; }
  int num_cells() const noexcept { return static_cast<int>(cells.size()) / (nsd + 1); }
  double cell_measure(int c) const;
  double measure() const;
};

/// Intersects every space-time simplex with the hyperplane {time = t}.
/// Nodes within 1e-12 (t_N - t_0) of t count as on the plane; a facet lying
/// in the plane belongs to the element below it (above it at t = t_0).
/// Throws EmptySlice when t is outside [t_0, t_N].
SliceResult slice_at_time(const Mesh& st, std::span<const double> field, int components, double t);

/// Point location in a space-time mesh through a uniform bucket grid over
/// element bounding boxes.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& st);

  struct Hit {
    int element = -1;
    std::array<double, kMaxDim + 1> bary{};
  };
  /// `point` holds the spatial coordinates followed by time. Returns the
  /// lowest-id element containing the point, except that a point on a time
  /// level belongs to an element below the level when one contains it.
  std::optional<Hit> locate(std::span<const double> point) const;
  /// Exhaustive scan, first containing element in id order.
  std::optional<Hit> locate_brute_force(std::span<const double> point) const;

  const Mesh& mesh() const noexcept { return *mesh_; }

 private:
  bool barycentric(int e, std::span<const double> point, std::array<double, kMaxDim + 1>& bary) const;
  int cell_of(std::span<const double> point) const;

  const Mesh* mesh_;
  std::array<double, kMaxDim> lo_{}, inv_h_{};
  std::array<int, kMaxDim> cells_{};
  std::vector<int> bucket_start_, bucket_elems_;
  std::vector<double> t_max_;  // latest node time per element
  double t_min_ = 0.0;
  double tol_time_ = 0.0;
};

/// Interpolated field values at (x, t) points (`point_dim` = n_sd + 1 values
/// each); std::nullopt for points outside the mesh.
std::vector<std::optional<std::vector<double>>> probe(const Mesh& st, std::span<const double> field, int components,
                                                      std::span<const double> points);

/// Spatial vorticity of the velocity (first n_sd components) at (x, t): the
/// scalar curl in 2D (returned in [2]) or the curl vector in 3D.
std::optional<Vec3> vorticity(const PointLocator& locator, std::span<const double> field, int components,
                              std::span<const double> point);

using ExactSolution = std::function<std::array<double, 4>(const Vec3& x, double t)>;

struct L2Error {
  std::vector<double> error;  // per component
  std::vector<double> norm;   // L2 norm of the exact solution per component
  double total_error = 0.0;
  double total_norm = 0.0;
};

/// Degree-2 quadrature of |u_h - u_exact|^2 over the slice. When
/// `mean_free_component` >= 0 that component's mean difference is removed
/// first (pressure defined up to a constant).
L2Error l2_error(const SliceResult& slice, const ExactSolution& exact, int mean_free_component = -1);

/// Legacy ASCII VTK unstructured grid with `velocity` (first n_sd
/// components) and `pressure` (component n_sd) point data.
void export_vtk(const SliceResult& slice, const std::string& path);
void export_vtk(const Mesh& spatial, std::span<const double> field, int components, const std::string& path);
void write_vtk(std::ostream& os, int nsd, std::span<const double> coords, std::span<const int> cells,
               std::span<const double> field, int components);

/// CSV with header `x,y[,z],t,u1,u2[,u3],p`; missing values print as nan.
void write_probe_csv(std::ostream& os, int nsd, std::span<const double> points,
                     const std::vector<std::optional<std::vector<double>>>& values);

}  // namespace stfem
