#pragma once

#include <span>

#include <Eigen/Dense>

namespace stfem {

/// Stabilization data of one space-time element.
struct StabilizationContext {
  Eigen::MatrixXd metric;  // G, symmetric positive definite, (n_sd+1)^2
  Eigen::VectorXd g;       // length n_sd
  double tau_mom = 0.0;
  double tau_cont = 0.0;
  double c_i = 1.0;
};

/// Gram matrix of the edge vectors v_k - v_0 of the regular simplex with unit
/// measure in `dim` dimensions: (a^2 / 2) (I + 1 1^T) for edge length a.
Eigen::MatrixXd regular_simplex_gram(int dim);

/// One placement of that regular simplex: columns are v_k - v_0 (upper
/// triangular).
Eigen::MatrixXd regular_simplex_edges(int dim);

/// Metric of a simplex with Jacobian J (columns x_{d+1} - x_1), built from
/// the derivatives of the map onto the regular unit-measure reference simplex:
///   G_kl = sum_i (d xi^i / d x^k)(d xi^i / d x^l).
/// Any node renumbering changes the reference map by an isometry of the
/// regular simplex, so G does not depend on node order.
Eigen::MatrixXd metric_contravariant(const Eigen::MatrixXd& J);

/// Metric of a tensor-product space-time element from its Jacobian at the
/// element center (reference coordinates: spatial xi mapped to the regular
/// unit simplex, theta in [0, 1]).
Eigen::MatrixXd prism_metric(const Eigen::MatrixXd& J_center);

/// tau_MOM = (u^ . G u^ + C_I nu^2 G:G)^(-1/2) with u^ = (u, 1).
/// `u` holds the spatial velocity (n_sd = G.rows() - 1 entries).
double tau_momentum(std::span<const double> u, double nu, const Eigen::MatrixXd& G, double c_i = 1.0);

/// g^i = |d xi / d x^i| over all reference coordinates, i spatial; taken
/// from the metric diagonal. g . g equals the node-order average of the
/// signed sum in g_vector_signed.
Eigen::VectorXd g_from_metric(const Eigen::MatrixXd& G);
Eigen::VectorXd g_vector(const Eigen::MatrixXd& J);

/// Literal g^i = sum_j d xi^j / d x^i (regular reference, node order as
/// stored). Depends on node numbering; kept for comparison.
Eigen::VectorXd g_vector_signed(const Eigen::MatrixXd& J);

/// tau_CONT = (tau_MOM g . g)^(-1).
double tau_continuity(double tau_mom, const Eigen::VectorXd& g);

StabilizationContext stabilization_context(const Eigen::MatrixXd& G, std::span<const double> u, double nu,
                                           double c_i = 1.0);

}  // namespace stfem
