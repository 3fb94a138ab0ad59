#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stfem/mesh.hpp"

namespace stfem::test {

/// Mesh made of one simplex, with no boundary facets listed.
inline Mesh single_simplex(int dim, std::vector<double> coords) {
  std::vector<int> cells(static_cast<std::size_t>(dim) + 1);
  std::iota(cells.begin(), cells.end(), 0);
  return Mesh(dim, std::move(coords), std::move(cells), {}, {});
}

/// Unit right simplex: origin plus the unit vectors.
inline std::vector<double> reference_simplex(int dim) {
  std::vector<double> c(static_cast<std::size_t>((dim + 1) * dim), 0.0);
  for (int d = 0; d < dim; ++d) c[static_cast<std::size_t>((d + 1) * dim + d)] = 1.0;
  return c;
}

/// Vertex coordinates of a random simplex whose shape is bounded away from
/// degeneracy (Jacobian condition number below `max_cond`).
inline std::vector<double> random_simplex(std::mt19937& rng, int dim, double max_cond = 50.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Eigen::MatrixXd j(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) j(r, c) = u(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
    const auto& s = svd.singularValues();
    if (s(dim - 1) <= 0.0 || s(0) / s(dim - 1) > max_cond) continue;
    std::vector<double> c(static_cast<std::size_t>((dim + 1) * dim));
    for (int d = 0; d < dim; ++d) c[static_cast<std::size_t>(d)] = u(rng);
    for (int k = 0; k < dim; ++k)
      for (int d = 0; d < dim; ++d)
        c[static_cast<std::size_t>((k + 1) * dim + d)] = c[static_cast<std::size_t>(d)] + j(d, k);
    return c;
  }
}

/// Jacobian with columns x_{k+1} - x_0 for flat vertex coordinates.
inline Eigen::MatrixXd jacobian_of(const std::vector<double>& c, int dim) {
  Eigen::MatrixXd j(dim, dim);
  for (int k = 0; k < dim; ++k)
    for (int d = 0; d < dim; ++d)
      j(d, k) = c[static_cast<std::size_t>((k + 1) * dim + d)] - c[static_cast<std::size_t>(d)];
  return j;
}

/// The same vertices listed in the order given by `perm`.
inline std::vector<double> permute_vertices(const std::vector<double>& c, int dim, const std::vector<int>& perm) {
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < perm.size(); ++k)
    for (int d = 0; d < dim; ++d)
      out[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)] =
          c[static_cast<std::size_t>(perm[k] * dim + d)];
  return out;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace stfem::test
