#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stfem/discretization.hpp"
#include "stfem/extrude.hpp"
#include "stfem/sparse.hpp"

namespace stfem {

struct MaterialParams {
  double rho = 1.0;
  double mu = 0.0;
  double nu() const { return mu / rho; }
};

/// Vector-valued function of position and time; only the first n_sd
/// components are used.
using VectorField = std::function<Vec3(const Vec3& x, double t)>;

struct BoundaryCondition {
  std::string tag;
  VectorField value;
};

/// Velocity (Dirichlet) and traction (Neumann) conditions by mantle tag, plus
/// the initial velocity. A node touching several Dirichlet tags takes the
/// first one in declaration order.
struct BCSpec {
  std::vector<BoundaryCondition> dirichlet;
  std::vector<BoundaryCondition> neumann;
  VectorField initial;  // evaluated with t = t0
};

struct Physics {
  MaterialParams material;
  VectorField body_force;  // empty means f = 0
  bool convection = true;  // false drops u . grad u (Stokes limit)
  double c_i = 1.0;
};

enum class PressureGauge { automatic, on, off };

/// u = omega x (x - center): rigid rotation about `center` (2D) or about
/// the line through `center` along `axis` (3D).
VectorField rigid_body_velocity(double omega, Vec3 center = {0.0, 0.0, 0.0}, Vec3 axis = {0.0, 0.0, 1.0});
VectorField constant_field(Vec3 value);

/// Prescribed velocity at every node touching a Dirichlet mantle facet,
/// evaluated at the node's own (x, t).
struct DirichletData {
  std::vector<int> nodes;       // sorted
  std::vector<double> values;   // n_sd per entry of `nodes`
};
DirichletData dirichlet_values(const Discretization& disc, const BCSpec& bcs);

/// Frozen stabilization parameters, one pair per element.
struct TauField {
  std::vector<double> mom;
  std::vector<double> cont;
};

/// Residual and Newton matrix of the stabilized space-time weak form on one
/// discretization. Unknowns are node-major: (u_1 .. u_nsd, p) per node.
///
/// The jump term on the bottom cap compares against the previous nodal
/// velocity when one was set (slab marching) and against `bcs.initial`
/// otherwise. Dirichlet and pressure-gauge unknowns get the rows
/// R = x - prescribed.
class Assembler {
 public:
  Assembler(const Discretization& disc, Physics physics, BCSpec bcs, PressureGauge gauge = PressureGauge::automatic);

  const Discretization& discretization() const noexcept { return *disc_; }
  const Physics& physics() const noexcept { return physics_; }
  int block_size() const noexcept { return disc_->nsd + 1; }
  int num_dofs() const noexcept { return disc_->num_nodes() * block_size(); }

  /// Velocity of the previous slab's top level, n_sd values for every
  /// bottom node (indexed by node id).
  void set_previous_state(std::vector<double> nodal_velocity);
  void clear_previous_state() { previous_.reset(); }

  /// Initial condition at every node (p = 0), Dirichlet values imposed.
  std::vector<double> initial_guess() const;
  /// Imposes Dirichlet and gauge values on `x`.
  void apply_constraints(std::span<double> x) const;

  TauField compute_tau(std::span<const double> x) const;

  std::vector<double> residual(std::span<const double> x, const TauField& tau) const;
  std::vector<double> residual(std::span<const double> x) const { return residual(x, compute_tau(x)); }
  /// Newton matrix and right-hand side -R(x).
  LinearSystem linearize(std::span<const double> x, const TauField& tau) const;

  /// Interior contributions of one element (no boundary terms, no
  /// constraints), local node-major ordering.
  Eigen::VectorXd element_residual(int e, std::span<const double> x, const TauField& tau) const;
  Eigen::MatrixXd element_jacobian_matrix(int e, std::span<const double> x, const TauField& tau) const;

  const DirichletData& dirichlet() const noexcept { return dirichlet_; }
  /// Pressure unknowns pinned to zero (one per time level), empty when the
  /// gauge is off.
  const std::vector<int>& gauge_dofs() const noexcept { return gauge_dofs_; }
  const NodeGraph& graph() const noexcept { return graph_; }

 private:
  void element_kernel(int e, std::span<const double> x, double tau_mom, double tau_cont, double* re,
                      double* ke) const;
  void boundary_terms(std::span<const double> x, std::vector<double>* r, CsrMatrix* k) const;

  const Discretization* disc_;
  Physics physics_;
  BCSpec bcs_;
  std::optional<std::vector<double>> previous_;
  DirichletData dirichlet_;
  std::vector<int> gauge_dofs_;
  std::vector<int> neumann_facets_;
  std::vector<int> neumann_bc_;
  NodeGraph graph_;
};

}  // namespace stfem
