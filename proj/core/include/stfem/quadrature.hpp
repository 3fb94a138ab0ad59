#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stfem {

/// Points in reference coordinates (flattened, `dim` per point) and
/// positive weights summing to the reference element measure.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;

  int size() const noexcept { return static_cast<int>(weights.size()); }
  std::span<const double> point(int q) const {
    return {points.data() + static_cast<std::size_t>(q) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Symmetric rule on the unit right simplex of dimension 1..4, exact up to
/// `degree` (1 or 2). Throws UnsupportedRule otherwise.
QuadratureRule simplex_quadrature(int dim, int degree = 2);

/// Tensor product of the spatial simplex rule with 2-point Gauss in the
/// temporal coordinate theta in [0, 1]; points are (xi..., theta).
QuadratureRule prism_quadrature(int dim_spatial, int degree = 2);

/// Shape functions of the tensor-product space-time element (3d6n / 4d8n):
/// N_bottom,a = N_a(xi) (1 - theta), N_top,a = N_a(xi) theta, bottom nodes
/// first.
struct PrismShape {
  Eigen::VectorXd values;         // 2 (n_sd + 1)
  Eigen::MatrixXd ref_gradients;  // rows: d/d(xi..., theta)
  Eigen::MatrixXd gradients;      // rows: physical d/d(x..., t); empty without geometry
  double det_jacobian = 0.0;
};

PrismShape prism_shape_functions(std::span<const double> xi, double theta);

/// Same, plus physical gradients from node coordinates (one row per node,
/// n_sd + 1 columns). The geometry Jacobian is evaluated at the point, so
/// twisted prisms are handled exactly.
PrismShape prism_shape_functions(std::span<const double> xi, double theta, const Eigen::MatrixXd& node_coords);

}  // namespace stfem
