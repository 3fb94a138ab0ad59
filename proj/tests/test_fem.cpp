#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "stfem/error.hpp"
#include "stfem/quadrature.hpp"
#include "stfem/stabilization.hpp"
#include "support.hpp"

using namespace stfem;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Dirichlet moment over the unit right simplex: prod(a_i!) / (dim + |a|)!
double exact_moment(const std::vector<int>& a) {
  double num = 1.0;
  int s = 0;
  for (int k : a) {
    num *= factorial(k);
    s += k;
  }
  return num / factorial(static_cast<int>(a.size()) + s);
}

std::vector<std::vector<int>> monomials_up_to(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == dim) {
      out.push_back(a);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      a[static_cast<std::size_t>(i)] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, degree);
  return out;
}

double integrate(const QuadratureRule& q, const std::function<double(std::span<const double>)>& f) {
  double s = 0.0;
  for (int i = 0; i < q.size(); ++i) s += q.weights[static_cast<std::size_t>(i)] * f(q.point(i));
  return s;
}

Eigen::MatrixXd rotation_about_z(double a, int dim) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
  r(0, 0) = std::cos(a);
  r(0, 1) = -std::sin(a);
  r(1, 0) = std::sin(a);
  r(1, 1) = std::cos(a);
  return r;
}

}  // namespace

TEST(Quadrature, ConstantAndFirstMoments) {
  EXPECT_NEAR(integrate(simplex_quadrature(3), [](auto) { return 1.0; }), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(integrate(simplex_quadrature(4), [](auto x) { return x[0]; }), 1.0 / 120.0, 1e-16);
  EXPECT_NEAR(integrate(simplex_quadrature(2), [](auto x) { return x[0] * x[0]; }), 1.0 / 12.0, 1e-15);
}

TEST(Quadrature, ExactForAllQuadraticMonomials) {
  for (int dim = 1; dim <= 4; ++dim) {
    for (int degree = 1; degree <= 2; ++degree) {
      const auto q = simplex_quadrature(dim, degree);
      for (double w : q.weights) EXPECT_GT(w, 0.0);
      for (int i = 0; i < q.size(); ++i) EXPECT_TRUE(in_reference_simplex(q.point(i), 1e-14));
      for (const auto& a : monomials_up_to(dim, degree)) {
        const double got = integrate(q, [&](std::span<const double> x) {
          double v = 1.0;
          for (int d = 0; d < dim; ++d) v *= std::pow(x[static_cast<std::size_t>(d)], a[static_cast<std::size_t>(d)]);
          return v;
        });
        EXPECT_NEAR(got, exact_moment(a), 1e-14) << "dim " << dim << " degree " << degree;
      }
    }
  }
}

TEST(Quadrature, UnsupportedRules) {
  EXPECT_THROW(simplex_quadrature(5), UnsupportedRule);
  EXPECT_THROW(simplex_quadrature(3, 3), UnsupportedRule);
  EXPECT_THROW(simplex_quadrature(0), UnsupportedRule);
}

TEST(PrismQuadrature, TensorExactness) {
  for (int nsd : {2, 3}) {
    const auto q = prism_quadrature(nsd);
    EXPECT_EQ(q.dim, nsd + 1);
    for (double w : q.weights) EXPECT_GT(w, 0.0);
    EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), 1.0 / factorial(nsd), 1e-15);
    for (const auto& a : monomials_up_to(nsd, 2)) {
      for (int k = 0; k <= 3; ++k) {
        const double got = integrate(q, [&](std::span<const double> x) {
          double v = std::pow(x[static_cast<std::size_t>(nsd)], k);
          for (int d = 0; d < nsd; ++d) v *= std::pow(x[static_cast<std::size_t>(d)], a[static_cast<std::size_t>(d)]);
          return v;
        });
        EXPECT_NEAR(got, exact_moment(a) / (k + 1), 1e-14);
      }
    }
  }
}

TEST(PrismShape, NodalBehaviourAndPartitionOfUnity) {
  const std::array<double, 2> xi{0.2, 0.3};
  const auto bottom = prism_shape_functions(xi, 0.0);
  const auto top = prism_shape_functions(xi, 1.0);
  const auto n = basis_eval(xi);
  for (int a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(bottom.values(a), n(a));
    EXPECT_DOUBLE_EQ(bottom.values(a + 3), 0.0);
    EXPECT_DOUBLE_EQ(top.values(a), 0.0);
    EXPECT_DOUBLE_EQ(top.values(a + 3), n(a));
  }
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.33);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::array<double, 3> x{u(rng), u(rng), u(rng)};
    const auto s = prism_shape_functions(x, 3.0 * u(rng));
    EXPECT_NEAR(s.values.sum(), 1.0, 1e-14);
    EXPECT_LT(s.ref_gradients.colwise().sum().cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PrismShape, TwistedPrismReproducesAffineFields) {
  // bottom triangle rotated by 0.3 rad at the top level, dt = 0.2
  Eigen::MatrixXd nodes(6, 3);
  const std::array<std::array<double, 2>, 3> tri{{{0.1, 0.0}, {1.2, 0.2}, {0.3, 0.9}}};
  for (int a = 0; a < 3; ++a) {
    const auto& p = tri[static_cast<std::size_t>(a)];
    nodes.row(a) << p[0], p[1], 0.0;
    const double c = std::cos(0.3), s = std::sin(0.3);
    nodes.row(a + 3) << c * p[0] - s * p[1], s * p[0] + c * p[1], 0.2;
  }
  const Eigen::Vector3d grad(0.7, -1.3, 2.1);
  Eigen::VectorXd f = nodes * grad;
  f.array() += 0.4;
  for (double theta : {0.0, 0.3, 0.8}) {
    const std::array<double, 2> xi{0.25, 0.5};
    const auto s = prism_shape_functions(xi, theta, nodes);
    EXPECT_GT(s.det_jacobian, 0.0);
    const Eigen::Vector3d g = s.gradients.transpose() * f;
    EXPECT_LT((g - grad).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(s.gradients.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RegularSimplex, UnitMeasureAndEqualEdges) {
  for (int dim = 1; dim <= 4; ++dim) {
    const auto e = regular_simplex_edges(dim);
    EXPECT_NEAR(e.determinant() / factorial(dim), 1.0, 1e-14);
    const double a = e.col(0).norm();
    for (int i = 0; i < dim; ++i) {
      EXPECT_NEAR(e.col(i).norm(), a, 1e-14);
      for (int j = i + 1; j < dim; ++j) EXPECT_NEAR((e.col(i) - e.col(j)).norm(), a, 1e-14);
    }
    EXPECT_LT(test::max_abs_diff(e.transpose() * e, regular_simplex_gram(dim)), 1e-14);
  }
}

TEST(Metric, RegularElementGivesIdentity) {
  for (int dim = 2; dim <= 4; ++dim) {
    const auto e = regular_simplex_edges(dim);
    EXPECT_LT(test::max_abs_diff(metric_contravariant(e), Eigen::MatrixXd::Identity(dim, dim)), 1e-13);
    const auto r = rotation_about_z(0.77, dim);
    EXPECT_LT(test::max_abs_diff(metric_contravariant(r * e), Eigen::MatrixXd::Identity(dim, dim)), 1e-13);
  }
}

TEST(Metric, ScalingLaw) {
  std::mt19937 rng(31);
  for (int dim = 3; dim <= 4; ++dim) {
    const auto j = test::jacobian_of(test::random_simplex(rng, dim), dim);
    const auto g = metric_contravariant(j);
    for (double s : {0.5, 3.0}) {
      const auto gs = metric_contravariant(s * j);
      EXPECT_LT(test::max_abs_diff(gs, g / (s * s)), 1e-12 * g.cwiseAbs().maxCoeff());
      EXPECT_NEAR(gs.squaredNorm(), g.squaredNorm() / std::pow(s, 4), 1e-10 * g.squaredNorm());
    }
  }
}

TEST(Metric, SymmetricPositiveDefinite) {
  std::mt19937 rng(37);
  for (int rep = 0; rep < 1000; ++rep) {
    const int dim = 3 + rep % 2;
    const auto g = metric_contravariant(test::jacobian_of(test::random_simplex(rng, dim, 1e3), dim));
    EXPECT_LT(test::max_abs_diff(g, g.transpose()), 1e-12 * g.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    ASSERT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Metric, SingularJacobianRejected) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(3, 3);
  j.col(2) = j.col(1);
  EXPECT_THROW(metric_contravariant(j), DegenerateElement);
  EXPECT_THROW(g_vector(j), DegenerateElement);
}

TEST(Metric, NodeOrderInvariance) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int dim = 3; dim <= 4; ++dim) {
    for (int rep = 0; rep < 30; ++rep) {
      const auto c = test::random_simplex(rng, dim);
      const std::vector<double> vel{u(rng), u(rng), u(rng)};
      const std::span<const double> uv(vel.data(), static_cast<std::size_t>(dim - 1));
      const double nu = std::abs(u(rng));
      const auto g0 = metric_contravariant(test::jacobian_of(c, dim));
      const auto ctx0 = stabilization_context(g0, uv, nu);
      std::vector<int> perm(static_cast<std::size_t>(dim + 1));
      std::iota(perm.begin(), perm.end(), 0);
      do {
        const auto g = metric_contravariant(test::jacobian_of(test::permute_vertices(c, dim, perm), dim));
        ASSERT_LT(test::max_abs_diff(g, g0), 1e-12 * std::max(1.0, g0.cwiseAbs().maxCoeff()));
        const auto ctx = stabilization_context(g, uv, nu);
        ASSERT_NEAR(ctx.tau_mom, ctx0.tau_mom, 1e-12 * ctx0.tau_mom);
        ASSERT_NEAR(ctx.tau_cont, ctx0.tau_cont, 1e-12 * ctx0.tau_cont);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
}

TEST(Tau, MomentumExamples) {
  const std::array<double, 2> u{1.0, 0.0};
  EXPECT_NEAR(tau_momentum(u, 0.0, Eigen::MatrixXd::Identity(3, 3)), 1.0 / std::sqrt(2.0), 1e-15);
  const std::array<double, 3> zero{0.0, 0.0, 0.0};
  EXPECT_NEAR(tau_momentum(zero, 1.0, Eigen::MatrixXd::Identity(4, 4), 1.0), 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_THROW(tau_momentum(u, 0.0, Eigen::MatrixXd::Zero(3, 3)), NonFiniteTau);
}

TEST(Tau, Homogeneity) {
  std::mt19937 rng(43);
  for (int dim = 3; dim <= 4; ++dim) {
    const auto j = test::jacobian_of(test::random_simplex(rng, dim), dim);
    const std::vector<double> vel{0.3, -0.8, 0.5};
    const std::span<const double> uv(vel.data(), static_cast<std::size_t>(dim - 1));
    const auto g = metric_contravariant(j);
    for (double s : {0.25, 4.0}) {
      const auto gs = metric_contravariant(s * j);
      const double t = tau_momentum(uv, 0.0, g), ts = tau_momentum(uv, 0.0, gs);
      EXPECT_NEAR(ts, s * t, 1e-12 * s * t);
      EXPECT_NEAR(g_from_metric(gs).squaredNorm(), g_from_metric(g).squaredNorm() / (s * s),
                  1e-12 * g_from_metric(g).squaredNorm());
      const double tc = tau_continuity(t, g_from_metric(g)), tcs = tau_continuity(ts, g_from_metric(gs));
      EXPECT_NEAR(tcs, s * tc, 1e-12 * s * tc);
    }
  }
}

TEST(Tau, ContinuityExamples) {
  Eigen::VectorXd g(2);
  g << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(tau_continuity(1.0, g), 0.5);
  EXPECT_DOUBLE_EQ(tau_continuity(2.0, g), 0.25);
  EXPECT_THROW(tau_continuity(0.0, g), ZeroDenominator);
  EXPECT_THROW(tau_continuity(1.0, Eigen::VectorXd::Zero(2)), ZeroDenominator);

  std::mt19937 rng(47);
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = 3 + rep % 2;
    const std::vector<double> vel{0.1 * rep, -0.2, 0.05};
    const auto ctx = stabilization_context(metric_contravariant(test::jacobian_of(test::random_simplex(rng, dim), dim)),
                                           std::span<const double>(vel.data(), static_cast<std::size_t>(dim - 1)), 0.01);
    EXPECT_NEAR(ctx.tau_cont * ctx.tau_mom * ctx.g.squaredNorm(), 1.0, 1e-12);
    EXPECT_GT(ctx.tau_mom, 0.0);
    EXPECT_GT(ctx.tau_cont, 0.0);
  }
}

TEST(GVector, HandOracleForUnitRightSimplex) {
  // J = I: the reference map is the fixed regular-simplex matrix itself, so
  // g_signed^i is the i-th column sum of the regular edge matrix.
  for (int dim = 3; dim <= 4; ++dim) {
    const auto e = regular_simplex_edges(dim);
    const auto gs = g_vector_signed(Eigen::MatrixXd::Identity(dim, dim));
    const auto g = g_vector(Eigen::MatrixXd::Identity(dim, dim));
    ASSERT_EQ(gs.size(), dim - 1);
    for (int i = 0; i < dim - 1; ++i) {
      EXPECT_NEAR(gs(i), e.col(i).sum(), 1e-14);
      EXPECT_NEAR(g(i), e.col(i).norm(), 1e-14);
    }
  }
  // congruent to the regular simplex: all ones
  const auto gr = g_vector_signed(regular_simplex_edges(4));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(gr(i), 1.0, 1e-13);
}

TEST(GVector, ScalingAndSpatialRotation) {
  std::mt19937 rng(53);
  for (int dim = 3; dim <= 4; ++dim) {
    const auto j = test::jacobian_of(test::random_simplex(rng, dim), dim);
    const auto g = g_vector(j);
    EXPECT_LT((g_vector(2.0 * j) - 0.5 * g).cwiseAbs().maxCoeff(), 1e-12 * g.maxCoeff());
    for (double a : {0.4, 2.9}) {
      const auto r = rotation_about_z(a, dim);  // leaves time untouched
      EXPECT_NEAR(g_vector(r * j).norm(), g.norm(), 1e-12 * g.norm());
    }
  }
}

TEST(GVector, MetricFormIsNodeOrderAverageOfSignedForm) {
  std::mt19937 rng(59);
  for (int dim = 3; dim <= 4; ++dim) {
    const auto c = test::random_simplex(rng, dim);
    std::vector<int> perm(static_cast<std::size_t>(dim + 1));
    std::iota(perm.begin(), perm.end(), 0);
    double sum = 0.0;
    int count = 0;
    do {
      sum += g_vector_signed(test::jacobian_of(test::permute_vertices(c, dim, perm), dim)).squaredNorm();
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double gg = g_vector(test::jacobian_of(c, dim)).squaredNorm();
    EXPECT_NEAR(sum / count, gg, 1e-10 * gg);
  }
}

TEST(PrismMetric, FlatUnitPrismOfRegularBase) {
  for (int nsd = 2; nsd <= 3; ++nsd) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Identity(nsd + 1, nsd + 1);
    j.topLeftCorner(nsd, nsd) = regular_simplex_edges(nsd);
    EXPECT_LT(test::max_abs_diff(prism_metric(j), Eigen::MatrixXd::Identity(nsd + 1, nsd + 1)), 1e-13);
    Eigen::MatrixXd js = j;
    js(nsd, nsd) = 0.1;
    EXPECT_NEAR(prism_metric(js)(nsd, nsd), 100.0, 1e-10);
  }
}
