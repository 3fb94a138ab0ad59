#include "stfem/stabilization.hpp"

#include <cmath>
#include <string>

#include "stfem/error.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

Eigen::MatrixXd regular_simplex_gram(int dim) {
  if (dim < 1 || dim > 4) throw Error("regular simplex dimension must be in [1, 4]");
  // V = a^D / D! * sqrt((D + 1) / 2^D) = 1
  const double aD = detail::factorial(dim) * std::sqrt(std::pow(2.0, dim) / (dim + 1.0));
  const double a2 = std::pow(aD, 2.0 / dim);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(dim, dim, 0.5 * a2);
  gram.diagonal().array() += 0.5 * a2;
  return gram;
}

Eigen::MatrixXd regular_simplex_edges(int dim) {
  const Eigen::MatrixXd gram = regular_simplex_gram(dim);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  return llt.matrixU();
}

Eigen::MatrixXd metric_contravariant(const Eigen::MatrixXd& J) {
  const auto d = J.rows();
  if (J.cols() != d) throw Error("Jacobian must be square");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
  if (!lu.isInvertible()) throw DegenerateElement(-1, "singular element Jacobian");
  const Eigen::MatrixXd Jinv = lu.inverse();
  return Jinv.transpose() * regular_simplex_gram(static_cast<int>(d)) * Jinv;
}

Eigen::MatrixXd prism_metric(const Eigen::MatrixXd& J_center) {
  const auto D = J_center.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(J_center);
  if (!lu.isInvertible()) throw DegenerateElement(-1, "singular prism Jacobian");
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(D, D);
  ref.topLeftCorner(D - 1, D - 1) = regular_simplex_gram(static_cast<int>(D - 1));
  ref(D - 1, D - 1) = 1.0;
  const Eigen::MatrixXd Jinv = lu.inverse();
  return Jinv.transpose() * ref * Jinv;
}

double tau_momentum(std::span<const double> u, double nu, const Eigen::MatrixXd& G, double c_i) {
  const auto D = G.rows();
  if (static_cast<Eigen::Index>(u.size()) != D - 1) throw Error("velocity size does not match metric");
  Eigen::VectorXd uh(D);
  for (Eigen::Index i = 0; i + 1 < D; ++i) uh(i) = u[static_cast<std::size_t>(i)];
  uh(D - 1) = 1.0;
  const double adv = uh.dot(G * uh);
  const double visc = c_i * nu * nu * G.squaredNorm();
  const double sum = adv + visc;
  if (!(sum > 0.0) || !std::isfinite(sum)) throw NonFiniteTau("tau_MOM undefined: both terms vanish");
  return 1.0 / std::sqrt(sum);
}

Eigen::VectorXd g_from_metric(const Eigen::MatrixXd& G) {
  const auto nsd = G.rows() - 1;
  return G.diagonal().head(nsd).cwiseSqrt();
}

Eigen::VectorXd g_vector(const Eigen::MatrixXd& J) { return g_from_metric(metric_contravariant(J)); }

Eigen::VectorXd g_vector_signed(const Eigen::MatrixXd& J) {
  const auto D = J.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
  if (!lu.isInvertible()) throw DegenerateElement(-1, "singular element Jacobian");
  const Eigen::MatrixXd A = regular_simplex_edges(static_cast<int>(D)) * lu.inverse();
  return A.colwise().sum().head(D - 1).transpose();
}

double tau_continuity(double tau_mom, const Eigen::VectorXd& g) {
  const double denom = tau_mom * g.squaredNorm();
  if (denom == 0.0 || !std::isfinite(denom)) throw ZeroDenominator("tau_CONT undefined: tau_MOM g.g = 0");
  return 1.0 / denom;
}

StabilizationContext stabilization_context(const Eigen::MatrixXd& G, std::span<const double> u, double nu,
                                           double c_i) {
  StabilizationContext ctx;
  ctx.metric = G;
  ctx.c_i = c_i;
  ctx.g = g_from_metric(G);
  ctx.tau_mom = tau_momentum(u, nu, G, c_i);
  ctx.tau_cont = tau_continuity(ctx.tau_mom, ctx.g);
  return ctx;
}

}  // namespace stfem
