#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace stfem {

/// Largest simplex dimension handled anywhere (pentatopes).
inline constexpr int kMaxDim = 4;

/// A boundary face of a simplicial mesh. Only the first `dim` node slots are
/// meaningful; the rest stay at -1.
struct BoundaryFacet {
  std::array<int, kMaxDim> nodes{-1, -1, -1, -1};
  int owner = -1;
  int tag = -1;
};

/// Simplicial mesh of dimension 2, 3 or 4 whose elements fill a region of the
/// same dimension. Used both for spatial meshes (triangles, tetrahedra) and
/// space-time meshes (tetrahedra over 2D space, pentatopes over 3D space), in
/// which case the last coordinate is time.
///
/// Construction fixes element orientation (two nodes are swapped when
/// det J < 0), rejects degenerate elements, and resolves the owner element of
/// every boundary facet. The mesh is immutable afterwards.
class Mesh {
 public:
  Mesh() = default;
  Mesh(int dim, std::vector<double> coords, std::vector<int> cells,
       std::vector<BoundaryFacet> facets, std::vector<std::string> tag_names);

  int dim() const noexcept { return dim_; }
  int nodes_per_element() const noexcept { return dim_ + 1; }
  int num_nodes() const noexcept { return dim_ == 0 ? 0 : static_cast<int>(coords_.size()) / dim_; }
  int num_elements() const noexcept {
    return dim_ == 0 ? 0 : static_cast<int>(cells_.size()) / (dim_ + 1);
  }

  std::span<const double> node(int i) const {
    return {coords_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const int> element(int e) const {
    return {cells_.data() + static_cast<std::size_t>(e) * (dim_ + 1),
            static_cast<std::size_t>(dim_ + 1)};
  }

  const std::vector<double>& coords() const noexcept { return coords_; }
  const std::vector<int>& cells() const noexcept { return cells_; }
  const std::vector<BoundaryFacet>& boundary() const noexcept { return facets_; }
  const std::vector<std::string>& tag_names() const noexcept { return tags_; }

  /// Integer id of a boundary tag, or -1 if no facet carries it.
  int tag_id(std::string_view name) const;
  const std::string& tag_name(int id) const { return tags_.at(static_cast<std::size_t>(id)); }

  /// Longest edge of element `e`.
  double max_edge_length(int e) const;

 private:
  int dim_ = 0;
  std::vector<double> coords_;
  std::vector<int> cells_;
  std::vector<BoundaryFacet> facets_;
  std::vector<std::string> tags_;
};

/// Returns the id of `name` in `tags`, appending it if absent.
int intern_tag(std::vector<std::string>& tags, std::string_view name);

struct ElementJacobian {
  Eigen::MatrixXd J;  // column d = x_{d+1} - x_1
  double det = 0.0;
};

/// Scale-aware degeneracy threshold: 1e-14 * h^dim with h the longest edge.
double degeneracy_threshold(double max_edge, int dim);

ElementJacobian element_jacobian(const Mesh& mesh, int e);
double element_measure(const Mesh& mesh, int e);
double mesh_measure(const Mesh& mesh);

/// P1 basis values at reference coordinates xi (dim = xi.size()).
/// Points outside the reference simplex are evaluated without complaint.
Eigen::VectorXd basis_eval(std::span<const double> xi);

/// True when xi lies in the closed reference simplex (up to `tol`).
bool in_reference_simplex(std::span<const double> xi, double tol = 0.0);

/// Physical gradients of the P1 basis: row k holds grad N_{k+1}.
Eigen::MatrixXd basis_gradients(const Mesh& mesh, int e);

Eigen::VectorXd map_local_to_global(const Mesh& mesh, int e, std::span<const double> xi);

// ---------------------------------------------------------------------------
// Space-time meshes

/// A simplicial mesh whose last coordinate is time, with its boundary split
/// into the bottom cap (t = t0), the top cap (t = tN) and the mantle.
struct SpaceTimeMesh {
  Mesh mesh;
  double t0 = 0.0;
  double tN = 0.0;
  std::vector<int> bottom_facets;  // indices into mesh.boundary()
  std::vector<int> top_facets;
  std::vector<int> mantle_facets;

  int num_spatial_dims() const noexcept { return mesh.dim() - 1; }
  double time(int node) const { return mesh.node(node)[static_cast<std::size_t>(mesh.dim() - 1)]; }
};

/// Partitions the boundary of a space-time mesh. A facet is `bottom` iff all
/// its node times lie within `tol` of t0, `top` iff within `tol` of tN, and
/// `mantle` otherwise (keeping its spatial tag).
SpaceTimeMesh classify_boundary(Mesh mesh, double t0, double tN, double tol = 1e-12);

/// Faces (as sorted node tuples) that belong to exactly one element, with
/// their owner. Tags are left unset.
std::vector<BoundaryFacet> find_boundary_faces(const Mesh& mesh);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks conformity (every interior face shared by exactly two elements),
/// positive measures and boundary closure (listed facets == faces with a
/// single owner).
ValidationReport validate_mesh(const Mesh& mesh);

}  // namespace stfem
