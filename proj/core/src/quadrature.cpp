#include "stfem/quadrature.hpp"

#include <cmath>
#include <string>

#include "stfem/error.hpp"
#include "stfem/mesh.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

QuadratureRule simplex_quadrature(int dim, int degree) {
  if (dim < 1 || dim > 4 || degree < 1 || degree > 2)
    throw UnsupportedRule("no simplex rule for dim " + std::to_string(dim) + ", degree " + std::to_string(degree));
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  const double measure = 1.0 / detail::factorial(dim);
  if (degree == 1) {
    rule.points.assign(static_cast<std::size_t>(dim), 1.0 / (dim + 1));
    rule.weights = {measure};
    return rule;
  }
  if (dim == 1) {
    const double h = 0.5 / std::sqrt(3.0);
    rule.points = {0.5 - h, 0.5 + h};
    rule.weights = {0.5, 0.5};
    rule.degree = 3;
    return rule;
  }
  // dim+1 points at barycentric (a, b, ..., b) and permutations.
  const double b = (dim + 2 - std::sqrt(dim + 2.0)) / ((dim + 1.0) * (dim + 2.0));
  const double a = 1.0 - dim * b;
  for (int v = 0; v <= dim; ++v) {
    // Barycentric coordinate k+1 is xi^k; vertex 0 is the origin.
    for (int k = 0; k < dim; ++k) rule.points.push_back(v == k + 1 ? a : b);
    rule.weights.push_back(measure / (dim + 1));
  }
  return rule;
}

QuadratureRule prism_quadrature(int dim_spatial, int degree) {
  const QuadratureRule s = simplex_quadrature(dim_spatial, degree);
  const double h = 0.5 / std::sqrt(3.0);
  const double gauss[2] = {0.5 - h, 0.5 + h};
  QuadratureRule rule;
  rule.dim = dim_spatial + 1;
  rule.degree = degree;
  for (int g = 0; g < 2; ++g) {
    for (int q = 0; q < s.size(); ++q) {
      auto p = s.point(q);
      rule.points.insert(rule.points.end(), p.begin(), p.end());
      rule.points.push_back(gauss[g]);
      rule.weights.push_back(0.5 * s.weights[static_cast<std::size_t>(q)]);
    }
  }
  return rule;
}

PrismShape prism_shape_functions(std::span<const double> xi, double theta) {
  const int nsd = static_cast<int>(xi.size());
  const int nv = nsd + 1;
  const Eigen::VectorXd n = basis_eval(xi);
  PrismShape s;
  s.values.resize(2 * nv);
  s.ref_gradients.setZero(2 * nv, nsd + 1);
  for (int a = 0; a < nv; ++a) {
    s.values(a) = n(a) * (1.0 - theta);
    s.values(nv + a) = n(a) * theta;
    for (int d = 0; d < nsd; ++d) {
      const double dn = a == 0 ? -1.0 : (a == d + 1 ? 1.0 : 0.0);
      s.ref_gradients(a, d) = dn * (1.0 - theta);
      s.ref_gradients(nv + a, d) = dn * theta;
    }
    s.ref_gradients(a, nsd) = -n(a);
    s.ref_gradients(nv + a, nsd) = n(a);
  }
  return s;
}

PrismShape prism_shape_functions(std::span<const double> xi, double theta, const Eigen::MatrixXd& node_coords) {
  PrismShape s = prism_shape_functions(xi, theta);
  if (node_coords.rows() != s.values.size() || node_coords.cols() != s.ref_gradients.cols())
    throw Error("prism node coordinate table has the wrong shape");
  // J(r, c) = d x_r / d ref_c
  const Eigen::MatrixXd J = node_coords.transpose() * s.ref_gradients;
  s.det_jacobian = J.determinant();
  s.gradients = s.ref_gradients * J.inverse();
  return s;
}

}  // namespace stfem
