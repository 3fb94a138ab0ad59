#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fd_check.hpp"
#include "stfem/assembly.hpp"
#include "stfem/discretization.hpp"
#include "stfem/error.hpp"
#include "stfem/extrude.hpp"
#include "support.hpp"

using namespace stfem;

namespace {

Discretization ust_box(int n, int levels, double tN, double omega = 0.0) {
  ExtrusionSpec ex;
  ex.levels = levels;
  ex.tN = tN;
  if (omega != 0.0) ex.trajectory = NodeTrajectory::rotation(omega, {0.5, 0.5, 0.0});
  return discretize_ust(extrude_simplex_st(make_box_mesh(n, n, 0.0, 1.0, 0.0, 1.0), ex));
}

Discretization ust_4d(int levels, double tN) {
  ExtrusionSpec ex;
  ex.levels = levels;
  ex.tN = tN;
  const Mesh cube = extrude_layers(make_box_mesh(1, 1, 0.0, 1.0, 0.0, 1.0), 0.0, 0.5, 1, "caps");
  return discretize_ust(extrude_simplex_st(cube, ex));
}

Discretization slab_box(int n, double dt, double omega = 0.0) {
  const Mesh m = make_box_mesh(n, n, 0.0, 1.0, 0.0, 1.0);
  const auto top = rigid_rotation_positions(m, NodeTrajectory::rotation(omega, {0.5, 0.5, 0.0}), 0.0, dt);
  return discretize_slab(m, m.coords(), top, 0.0, dt);
}

Discretization single_element(int dim, const std::vector<double>& coords) {
  const Mesh m = test::single_simplex(dim, coords);
  return discretize_ust(classify_boundary(m, -1e9, 1e9));
}

std::vector<double> constant_state(const Discretization& d, const Vec3& c, double p = 0.0) {
  const int bs = d.nsd + 1;
  std::vector<double> x(static_cast<std::size_t>(d.num_nodes() * bs));
  for (int i = 0; i < d.num_nodes(); ++i) {
    for (int k = 0; k < d.nsd; ++k) x[static_cast<std::size_t>(i * bs + k)] = c[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i * bs + d.nsd)] = p;
  }
  return x;
}

BCSpec all_walls(const Discretization& d, const Vec3& c) {
  BCSpec b;
  for (const auto& t : d.tags)
    if (t != "bottom" && t != "top") b.dirichlet.push_back({t, constant_field(c)});
  b.initial = constant_field(c);
  return b;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(Residual, ZeroFieldGivesZero) {
  for (const auto& d : {ust_box(2, 2, 0.5, 1.0), slab_box(3, 0.1, 1.0), ust_4d(1, 0.3)}) {
    Physics ph;
    ph.material = {1.0, 0.1};
    const Assembler a(d, ph, all_walls(d, {0, 0, 0}));
    const std::vector<double> x(static_cast<std::size_t>(a.num_dofs()), 0.0);
    const auto r = a.residual(x);
    EXPECT_EQ(max_abs(r), 0.0);
  }
}

TEST(Residual, ConstantFieldHasZeroInteriorResidual) {
  const Vec3 c{0.4, -0.9, 0.3};
  for (const auto& d : {ust_box(2, 2, 0.5), slab_box(3, 0.1), ust_4d(1, 0.3)}) {
    Physics ph;
    ph.material = {1.7, 0.2};
    const Assembler a(d, ph, all_walls(d, c));
    const auto x = constant_state(d, c);
    const auto tau = a.compute_tau(x);
    for (int e = 0; e < d.num_elements(); ++e) ASSERT_LT(a.element_residual(e, x, tau).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Residual, ElementSumsMatchHandIntegrals) {
  // Affine u and p: summing the local rows over the element's nodes removes
  // every term carrying a test-function gradient, leaving
  //   sum of u_k rows = rho |e| (a_t,k + u(barycenter) . grad u_k - f_k)
  //   sum of p rows   = |e| div u
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  for (int dim : {3, 4}) {
    const int nsd = dim - 1;
    for (int rep = 0; rep < 20; ++rep) {
      const Discretization d = single_element(dim, test::random_simplex(rng, dim));
      Eigen::MatrixXd grad(nsd + 1, dim);  // row k: gradient of component k in (x, t)
      Eigen::VectorXd off(nsd + 1);
      for (int k = 0; k <= nsd; ++k) {
        off(k) = un(rng);
        for (int m = 0; m < dim; ++m) grad(k, m) = un(rng);
      }
      const Vec3 f{un(rng), un(rng), un(rng)};
      Physics ph;
      ph.material = {1.4, 0.3};
      ph.body_force = constant_field(f);
      BCSpec none;
      none.initial = constant_field({0, 0, 0});
      const Assembler a(d, ph, none, PressureGauge::off);
      std::vector<double> x(static_cast<std::size_t>(a.num_dofs()));
      Eigen::VectorXd bary = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < d.num_nodes(); ++i) {
        const Eigen::Map<const Eigen::VectorXd> p(d.node(i).data(), dim);
        bary += p / (dim + 1);
        const Eigen::VectorXd v = grad * p + off;
        for (int k = 0; k <= nsd; ++k) x[static_cast<std::size_t>(i * (nsd + 1) + k)] = v(k);
      }
      const Eigen::VectorXd ub = grad * bary + off;
      const double vol = std::abs(test::jacobian_of(d.coords, dim).determinant()) / (dim == 3 ? 6.0 : 24.0);
      const auto tau = a.compute_tau(x);
      const Eigen::VectorXd re = a.element_residual(0, x, tau);
      for (int k = 0; k <= nsd; ++k) {
        double sum = 0.0;
        for (int loc = 0; loc <= dim; ++loc) sum += re(loc * (nsd + 1) + k);
        double want;
        if (k < nsd) {
          double adv = grad(k, nsd);
          for (int m = 0; m < nsd; ++m) adv += ub(m) * grad(k, m);
          want = ph.material.rho * vol * (adv - f[static_cast<std::size_t>(k)]);
        } else {
          double div = 0.0;
          for (int m = 0; m < nsd; ++m) div += grad(m, m);
          want = vol * div;
        }
        EXPECT_NEAR(sum, want, 1e-12 * std::max(1.0, std::abs(want))) << "dim " << dim << " component " << k;
      }
    }
  }
}

TEST(JumpTerm, MatchesFacetMassRowSums) {
  // one triangle of area 1 extruded one level; u+ = c, u- = 0
  const Mesh tri(2, {0, 0, 2, 0, 0, 1}, {0, 1, 2}, {}, {});
  ExtrusionSpec ex;
  ex.tN = 0.25;
  const Discretization d = discretize_ust(extrude_simplex_st(tri, ex));
  Physics ph;
  ph.material = {2.0, 0.1};
  BCSpec b;
  b.initial = constant_field({0, 0, 0});
  const Vec3 c{0.3, -0.5, 0.0};
  const Assembler a(d, ph, b, PressureGauge::off);
  const auto r = a.residual(constant_state(d, c));
  for (int i = 0; i < d.num_nodes(); ++i) {
    const bool bottom = d.node(i)[2] == 0.0;
    for (int k = 0; k < 2; ++k)
      EXPECT_NEAR(r[static_cast<std::size_t>(i * 3 + k)], bottom ? 2.0 * c[static_cast<std::size_t>(k)] / 3.0 : 0.0,
                  1e-14);
    EXPECT_NEAR(r[static_cast<std::size_t>(i * 3 + 2)], 0.0, 1e-14);
  }

  BCSpec same;
  same.initial = constant_field(c);
  const Assembler a2(d, ph, same, PressureGauge::off);
  EXPECT_LT(max_abs(a2.residual(constant_state(d, c))), 1e-14);
}

TEST(JumpTerm, PreviousStateIsUsedNodeByNode) {
  const Discretization d = slab_box(3, 0.05, 2.0);
  Physics ph;
  ph.material = {1.0, 0.05};
  BCSpec b = all_walls(d, {0, 0, 0});
  b.initial = nullptr;
  Assembler a(d, ph, b);
  const std::vector<double> x(static_cast<std::size_t>(a.num_dofs()), 0.0);
  EXPECT_THROW(a.residual(x), MissingPreviousState);
  EXPECT_THROW(a.set_previous_state({1.0, 2.0}), MissingPreviousState);
  a.set_previous_state(std::vector<double>(static_cast<std::size_t>(d.num_nodes() * 2), 0.0));
  EXPECT_EQ(max_abs(a.residual(x)), 0.0);
}

TEST(TractionTerm, ConstantTractionOnFlatFacets) {
  const Vec3 h{0.7, -0.2, 0.0};
  for (const auto& d : {ust_box(3, 2, 0.4), slab_box(3, 0.4)}) {
    Physics ph;
    ph.material = {1.0, 0.1};
    BCSpec b;
    b.neumann.push_back({"xmax", constant_field(h)});
    b.initial = constant_field({0, 0, 0});
    const Assembler a(d, ph, b, PressureGauge::off);
    const auto r = a.residual(std::vector<double>(static_cast<std::size_t>(a.num_dofs()), 0.0));
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < d.num_nodes(); ++i) {
      const double rx = r[static_cast<std::size_t>(i * 3)], ry = r[static_cast<std::size_t>(i * 3 + 1)];
      if (d.node(i)[0] != 1.0) {
        EXPECT_EQ(rx, 0.0);
        EXPECT_EQ(ry, 0.0);
      }
      sx += rx;
      sy += ry;
    }
    // facet area: side length 1 times time span 0.4
    EXPECT_NEAR(sx, -0.7 * 0.4, 1e-14);
    EXPECT_NEAR(sy, 0.2 * 0.4, 1e-14);
  }
}

TEST(TractionTerm, ZeroTractionContributesNothing) {
  const auto d = ust_box(2, 1, 0.3);
  BCSpec b;
  b.neumann.push_back({"xmax", constant_field({0, 0, 0})});
  b.initial = constant_field({0, 0, 0});
  const Assembler a(d, Physics{}, b, PressureGauge::off);
  EXPECT_EQ(max_abs(a.residual(std::vector<double>(static_cast<std::size_t>(a.num_dofs()), 0.0))), 0.0);
}

TEST(Assembler, OverlappingTagsRejected) {
  const auto d = ust_box(2, 1, 0.3);
  BCSpec b;
  b.dirichlet.push_back({"xmin", constant_field({0, 0, 0})});
  b.neumann.push_back({"xmin", constant_field({0, 0, 0})});
  b.initial = constant_field({0, 0, 0});
  EXPECT_THROW(Assembler(d, Physics{}, b), ConfigurationError);
  Physics bad;
  bad.material = {0.0, 1.0};
  EXPECT_THROW(Assembler(d, bad, all_walls(d, {0, 0, 0})), ConfigurationError);
}

TEST(Jacobian, MatchesFiniteDifferences3DSpaceTime) {
  std::mt19937 rng(67);
  const auto d = ust_box(2, 2, 0.2, 0.5);
  ASSERT_LE(d.num_elements(), 50);
  const Assembler a(d, test::fd_physics(), test::fd_bcs("xmin", "xmax"));
  const auto x = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
  EXPECT_LT(test::fd_jacobian_error(a, x, rng, 8, 12), 1e-5);
}

TEST(Jacobian, MatchesFiniteDifferences4DSpaceTime) {
  std::mt19937 rng(71);
  const auto d = ust_4d(2, 0.2);
  ASSERT_LE(d.num_elements(), 50);
  const Assembler a(d, test::fd_physics(), test::fd_bcs("xmin", "caps"));
  const auto x = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
  EXPECT_LT(test::fd_jacobian_error(a, x, rng, 8, 12), 1e-5);
}

TEST(Jacobian, MatchesFiniteDifferencesTwistedSlab) {
  std::mt19937 rng(73);
  const auto d = slab_box(3, 0.1, 2.0);
  Assembler a(d, test::fd_physics(), test::fd_bcs("ymin", "xmax"));
  a.set_previous_state(test::random_state(rng, static_cast<std::size_t>(d.num_nodes() * 2)));
  const auto x = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
  EXPECT_LT(test::fd_jacobian_error(a, x, rng, 8, 12), 1e-5);
}

TEST(Jacobian, StokesLimitIsIndependentOfIterate) {
  std::mt19937 rng(79);
  for (const auto& d : {ust_box(2, 2, 0.2, 0.5), slab_box(2, 0.1, 1.0)}) {
    Physics ph = test::fd_physics();
    ph.convection = false;
    const Assembler a(d, ph, test::fd_bcs("xmin", "xmax"));
    const auto x1 = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
    const auto x2 = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
    const auto tau = a.compute_tau(x1);
    const auto k1 = a.linearize(x1, tau).matrix.values;
    const auto k2 = a.linearize(x2, tau).matrix.values;
    ASSERT_EQ(k1.size(), k2.size());
    for (std::size_t i = 0; i < k1.size(); ++i) ASSERT_NEAR(k1[i], k2[i], 1e-12 * (1.0 + std::abs(k1[i])));
  }
}

TEST(Jacobian, ViscousBlockIsSymmetricAtRest) {
  for (const auto& d : {ust_box(2, 1, 0.2), ust_4d(1, 0.2), slab_box(2, 0.1)}) {
    Physics with = test::fd_physics();
    Physics without = with;
    without.material.mu = 0.0;
    const BCSpec b = test::fd_bcs("xmin", "xmax");
    const Assembler av(d, with, b), a0(d, without, b);
    const std::vector<double> x(static_cast<std::size_t>(av.num_dofs()), 0.0);
    const auto tau = av.compute_tau(x);
    const int bs = d.nsd + 1;
    for (int e = 0; e < d.num_elements(); ++e) {
      const Eigen::MatrixXd k = av.element_jacobian_matrix(e, x, tau) - a0.element_jacobian_matrix(e, x, tau);
      ASSERT_GT(k.cwiseAbs().maxCoeff(), 0.0);
      for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j)
          if (i % bs != d.nsd && j % bs != d.nsd) ASSERT_NEAR(k(i, j), k(j, i), 1e-12);
    }
  }
}

TEST(Assemble, ConstraintRowsAndDeterminism) {
  std::mt19937 rng(83);
  const auto d = ust_box(3, 2, 0.3, 0.8);
  const Assembler a(d, test::fd_physics(), all_walls(d, {0.2, 0.1, 0.0}), PressureGauge::on);
  const auto x = test::random_state(rng, static_cast<std::size_t>(a.num_dofs()));
  const auto tau = a.compute_tau(x);
  const auto s1 = a.linearize(x, tau);
  const auto s2 = a.linearize(x, tau);
  EXPECT_EQ(s1.matrix.values, s2.matrix.values);
  EXPECT_EQ(s1.rhs, s2.rhs);
  EXPECT_EQ(a.residual(x, tau), a.residual(x, tau));

  // structurally symmetric pattern
  for (int r = 0; r < s1.matrix.rows; ++r)
    for (int p = s1.matrix.row_ptr[static_cast<std::size_t>(r)]; p < s1.matrix.row_ptr[static_cast<std::size_t>(r) + 1]; ++p)
      ASSERT_NE(s1.matrix.find(s1.matrix.col_idx[static_cast<std::size_t>(p)], r), nullptr);

  const auto r = a.residual(x, tau);
  const auto& dir = a.dirichlet();
  ASSERT_FALSE(dir.nodes.empty());
  for (std::size_t k = 0; k < dir.nodes.size(); ++k) {
    for (int c = 0; c < 2; ++c) {
      const int dof = dir.nodes[k] * 3 + c;
      EXPECT_EQ(r[static_cast<std::size_t>(dof)], x[static_cast<std::size_t>(dof)] - dir.values[k * 2 + static_cast<std::size_t>(c)]);
      EXPECT_EQ(s1.rhs[static_cast<std::size_t>(dof)], -r[static_cast<std::size_t>(dof)]);
      for (int p = s1.matrix.row_ptr[static_cast<std::size_t>(dof)]; p < s1.matrix.row_ptr[static_cast<std::size_t>(dof) + 1]; ++p)
        EXPECT_EQ(s1.matrix.values[static_cast<std::size_t>(p)], s1.matrix.col_idx[static_cast<std::size_t>(p)] == dof ? 1.0 : 0.0);
    }
  }
  EXPECT_EQ(a.gauge_dofs().size(), 3u);
}

TEST(DirichletValues, RigidRotation) {
  const auto v = rigid_body_velocity(1.5);
  const Vec3 at = v({2.0, 0.0, 0.0}, 0.3);
  EXPECT_NEAR(at[0], 0.0, 1e-15);
  EXPECT_NEAR(at[1], 3.0, 1e-15);
  const Vec3 axis = v({0.0, 0.0, 0.0}, 1.0);
  EXPECT_EQ(axis[0], 0.0);
  EXPECT_EQ(axis[1], 0.0);
  // 3D about the x axis through (0, 1, 0)
  const auto v3 = rigid_body_velocity(2.0, {0.0, 1.0, 0.0}, {1.0, 0.0, 0.0});
  const Vec3 p = v3({5.0, 1.0, 0.5}, 0.0);
  EXPECT_NEAR(p[0], 0.0, 1e-15);
  EXPECT_NEAR(p[1], -1.0, 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
}

TEST(DirichletValues, AnnulusNodesUseOwnPositionAndTime) {
  ExtrusionSpec ex;
  ex.levels = 2;
  ex.tN = 0.1;
  ex.trajectory = NodeTrajectory::rotation(2.0);
  const auto d = discretize_ust(extrude_simplex_st(make_annulus_mesh(0.5, 1.0, 2, 16), ex));
  BCSpec b;
  b.dirichlet.push_back({"inner", rigid_body_velocity(2.0)});
  b.dirichlet.push_back({"outer", constant_field({0, 0, 0})});
  const auto data = dirichlet_values(d, b);
  EXPECT_TRUE(std::is_sorted(data.nodes.begin(), data.nodes.end()));
  ASSERT_EQ(data.nodes.size(), static_cast<std::size_t>(3 * 2 * 16));
  for (std::size_t k = 0; k < data.nodes.size(); ++k) {
    const auto p = d.node(data.nodes[k]);
    const double r = std::hypot(p[0], p[1]);
    const double vx = data.values[2 * k], vy = data.values[2 * k + 1];
    if (r < 0.75) {
      EXPECT_NEAR(vx, -2.0 * p[1], 1e-14);
      EXPECT_NEAR(vy, 2.0 * p[0], 1e-14);
    } else {
      EXPECT_EQ(vx, 0.0);
      EXPECT_EQ(vy, 0.0);
    }
  }
}

TEST(GalileanInvariance, ConstantStateIsAFixedPoint) {
  const Vec3 c{0.6, -0.35, 0.2};
  for (const auto& d : {ust_box(3, 3, 0.3, 0.0), slab_box(3, 0.1, 0.0), ust_4d(2, 0.2)}) {
    Physics ph;
    ph.material = {1.2, 0.07};
    const Assembler a(d, ph, all_walls(d, c));
    ASSERT_FALSE(a.gauge_dofs().empty());
    auto x = a.initial_guess();
    EXPECT_EQ(x, constant_state(d, c));
    EXPECT_LT(max_abs(a.residual(x)), 1e-10);
  }
}
