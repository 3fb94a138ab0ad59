#pragma once

// Small fixed-size helpers shared by the geometry, extrusion and slicing code.

#include <Eigen/Dense>

namespace stfem::detail {

constexpr double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

template <int D>
double signed_volume_det_fixed(const double* coords, const int* ids) {
  Eigen::Matrix<double, D, D> J;
  const double* x0 = coords + static_cast<std::ptrdiff_t>(ids[0]) * D;
  for (int c = 0; c < D; ++c) {
    const double* xc = coords + static_cast<std::ptrdiff_t>(ids[c + 1]) * D;
    for (int r = 0; r < D; ++r) J(r, c) = xc[r] - x0[r];
  }
  return J.determinant();
}

/// det of [x_1 - x_0, ..., x_D - x_0] for a simplex given by node ids into a
/// flat coordinate array with `dim` entries per node.
inline double signed_volume_det(const double* coords, const int* ids, int dim) {
  switch (dim) {
    case 1: return coords[ids[1]] - coords[ids[0]];
    case 2: return signed_volume_det_fixed<2>(coords, ids);
    case 3: return signed_volume_det_fixed<3>(coords, ids);
    case 4: return signed_volume_det_fixed<4>(coords, ids);
    default: return 0.0;
  }
}

}  // namespace stfem::detail
