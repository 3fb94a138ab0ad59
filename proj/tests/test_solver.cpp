#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "stfem/assembly.hpp"
#include "stfem/discretization.hpp"
#include "stfem/error.hpp"
#include "stfem/extrude.hpp"
#include "stfem/solver.hpp"

using namespace stfem;

namespace {

/// Small dense nonlinear system given by residual and Jacobian callbacks.
class DenseProblem final : public NonlinearProblem {
 public:
  using Vec = std::vector<double>;
  DenseProblem(int n, std::function<Vec(const Vec&)> r, std::function<Vec(const Vec&)> j)
      : n_(n), r_(std::move(r)), j_(std::move(j)) {}
  int size() const override { return n_; }
  Vec residual(std::span<const double> x) override { return r_(Vec(x.begin(), x.end())); }
  LinearSystem linearize(std::span<const double> x) override {
    const Vec v(x.begin(), x.end());
    LinearSystem s;
    s.matrix = CsrMatrix::from_dense(n_, n_, j_(v));
    s.rhs = r_(v);
    for (double& b : s.rhs) b = -b;
    return s;
  }

 private:
  int n_;
  std::function<Vec(const Vec&)> r_, j_;
};

NewtonConfig quiet(LinearMethod m = LinearMethod::direct_lu) {
  NewtonConfig c;
  c.log = false;
  c.linear.method = m;
  return c;
}

Eigen::MatrixXd random_matrix(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
  a.diagonal().array() += 0.5 * n;  // keeps the Krylov iteration short
  return a;
}

CsrMatrix to_csr(const Eigen::MatrixXd& a) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a;
  return CsrMatrix::from_dense(static_cast<int>(a.rows()), static_cast<int>(a.cols()),
                               std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
}

double rel_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::pow(a[i] - b(static_cast<Eigen::Index>(i)), 2);
    den += std::pow(b(static_cast<Eigen::Index>(i)), 2);
  }
  return std::sqrt(num / den);
}

Assembler flow_assembler(const Discretization& d, bool convection) {
  Physics ph;
  ph.material = {1.0, 0.05};
  ph.convection = convection;
  ph.body_force = [](const Vec3& x, double t) { return Vec3{std::cos(x[1]) * (1 + t), x[0], 0.0}; };
  BCSpec b;
  for (const char* t : {"xmin", "ymin", "ymax"}) b.dirichlet.push_back({t, rigid_body_velocity(1.0, {0.5, 0.5, 0.0})});
  b.initial = constant_field({0, 0, 0});
  return Assembler(d, ph, b);
}

Discretization box_ust(int n, int levels) {
  ExtrusionSpec ex;
  ex.levels = levels;
  ex.tN = 0.2;
  return discretize_ust(extrude_simplex_st(make_box_mesh(n, n, 0.0, 1.0, 0.0, 1.0), ex));
}

}  // namespace

TEST(Sparse, CsrBasics) {
  const std::vector<double> dense{1, 0, 2, 0, 3, 0, 4, 0, 5};
  auto a = CsrMatrix::from_dense(3, 3, dense);
  EXPECT_EQ(a.nnz(), 5);
  EXPECT_EQ(a.at(0, 2), 2.0);
  EXPECT_EQ(a.find(0, 1), nullptr);
  std::vector<double> y(3);
  a.multiply(std::vector<double>{1, 1, 1}, y);
  EXPECT_EQ(y, (std::vector<double>{3, 3, 9}));
  a.set_identity_row(2);
  EXPECT_EQ(a.at(2, 0), 0.0);
  EXPECT_EQ(a.at(2, 2), 1.0);
  const auto id = CsrMatrix::identity(4);
  EXPECT_EQ(id.nnz(), 4);
}

TEST(Sparse, BlockPatternOffsets) {
  const std::vector<int> conn{0, 1, 2, 1, 2, 3};
  const auto g = build_node_graph(4, conn, 3);
  EXPECT_EQ(g.degree(0), 3);
  EXPECT_EQ(g.degree(1), 4);
  EXPECT_EQ(g.position(0, 3), -1);
  const auto p = block_pattern(g, 3);
  EXPECT_EQ(p.rows, 12);
  for (int a = 0; a < 4; ++a)
    for (int pos = 0; pos < g.degree(a); ++pos) {
      const int b = g.adj[static_cast<std::size_t>(g.ptr[static_cast<std::size_t>(a)] + pos)];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          EXPECT_EQ(p.col_idx[static_cast<std::size_t>(block_offset(g, 3, a, r, pos, c))], b * 3 + c);
    }
}

TEST(Gmres, IdentityInOneIteration) {
  const auto a = CsrMatrix::identity(10);
  std::vector<double> b(10);
  for (int i = 0; i < 10; ++i) b[static_cast<std::size_t>(i)] = i - 3.5;
  LinearSolverConfig cfg;
  cfg.preconditioner = Preconditioner::none;
  LinearSolveStats st;
  const auto x = gmres_solve(a, b, cfg, &st);
  EXPECT_EQ(st.iterations, 1);
  EXPECT_TRUE(st.converged);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)], 1e-14);
}

TEST(Gmres, DiagonalIsComponentwiseDivision) {
  std::vector<double> dense(36, 0.0), b(6);
  for (int i = 0; i < 6; ++i) {
    dense[static_cast<std::size_t>(i * 7)] = 1.0 + i;
    b[static_cast<std::size_t>(i)] = 2.0 * i + 1.0;
  }
  const auto a = CsrMatrix::from_dense(6, 6, dense);
  for (auto pc : {Preconditioner::none, Preconditioner::jacobi_block, Preconditioner::ilu0}) {
    LinearSolverConfig cfg;
    cfg.preconditioner = pc;
    const auto x = gmres_solve(a, b, cfg);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], (2.0 * i + 1.0) / (1.0 + i), 1e-12);
  }
}

TEST(Gmres, RandomSystemMatchesDenseLu) {
  std::mt19937 rng(89);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd a = random_matrix(rng, 50);
    Eigen::VectorXd b(50);
    for (int i = 0; i < 50; ++i) b(i) = u(rng);
    const Eigen::VectorXd ref = a.partialPivLu().solve(b);
    const auto csr = to_csr(a);
    const std::vector<double> bv(b.data(), b.data() + 50);
    for (auto pc : {Preconditioner::none, Preconditioner::jacobi_block, Preconditioner::ilu0}) {
      LinearSolverConfig cfg;
      cfg.preconditioner = pc;
      cfg.restart = 20;
      cfg.lin_rel_tol = 1e-12;
      cfg.direct_fallback_max = 0;
      LinearSolveStats st;
      EXPECT_LT(rel_diff(gmres_solve(csr, bv, cfg, &st, 2), ref), 1e-8);
      EXPECT_FALSE(st.used_direct);
    }
    EXPECT_LT(rel_diff(direct_lu(csr, bv), ref), 1e-10);
  }
}

TEST(Gmres, FailureIsReportedWithoutFallback) {
  std::mt19937 rng(97);
  Eigen::MatrixXd a = random_matrix(rng, 60);
  a.diagonal().array() -= 30.0;  // indefinite, slow without preconditioning
  const auto csr = to_csr(a);
  const std::vector<double> b(60, 1.0);
  LinearSolverConfig cfg;
  cfg.preconditioner = Preconditioner::none;
  cfg.restart = 2;
  cfg.max_krylov_iter = 4;
  cfg.direct_fallback_max = 0;
  cfg.stagnation_accept = 0.0;
  EXPECT_THROW(gmres_solve(csr, b, cfg), LinearSolveFailure);

  cfg.direct_fallback_max = 100;
  LinearSolveStats st;
  const auto x = gmres_solve(csr, b, cfg, &st);
  EXPECT_TRUE(st.used_direct);
  const Eigen::VectorXd ref = a.partialPivLu().solve(Eigen::VectorXd::Ones(60));
  EXPECT_LT(rel_diff(x, ref), 1e-10);
}

TEST(Gmres, AgreesWithDirectOnFlowSystems) {
  const auto d = box_ust(4, 2);
  const Assembler a = flow_assembler(d, true);
  const auto x = a.initial_guess();
  const auto sys = a.linearize(x, a.compute_tau(x));
  const auto ref = direct_lu(sys.matrix, sys.rhs);
  const Eigen::Map<const Eigen::VectorXd> refv(ref.data(), static_cast<Eigen::Index>(ref.size()));
  for (auto pc : {Preconditioner::ilu0, Preconditioner::jacobi_block}) {
    LinearSolverConfig cfg;
    cfg.preconditioner = pc;
    cfg.direct_fallback_max = 0;
    cfg.lin_rel_tol = 1e-12;
    LinearSolveStats st;
    const auto xs = gmres_solve(sys.matrix, sys.rhs, cfg, &st, sys.block_size);
    EXPECT_LT(rel_diff(xs, refv), 1e-8) << to_string(pc);
    EXPECT_TRUE(st.converged);
  }
}

TEST(Newton, QuadraticConvergenceOnSmoothSystem) {
  DenseProblem p(
      2,
      [](const auto& x) { return std::vector<double>{x[0] * x[0] + x[1] * x[1] - 4.0, std::exp(x[0]) + x[1] - 1.0}; },
      [](const auto& x) { return std::vector<double>{2 * x[0], 2 * x[1], std::exp(x[0]), 1.0}; });
  auto cfg = quiet();
  cfg.abs_tol = 1e-13;
  cfg.rel_tol = 1e-14;
  const auto r = newton_solve(p, {1.0, -1.0}, cfg);
  ASSERT_TRUE(r.converged());
  const auto& n = r.residual_norms;
  int checked = 0;
  for (std::size_t k = 0; k + 1 < n.size(); ++k) {
    if (n[k] < 1e-3 && n[k + 1] > 1e-15) {
      EXPECT_LT(n[k + 1] / (n[k] * n[k]), 10.0);
      ++checked;
    }
  }
  EXPECT_GE(checked, 1);
  EXPECT_NEAR(r.solution[0] * r.solution[0] + r.solution[1] * r.solution[1], 4.0, 1e-12);
}

TEST(Newton, BacktrackingRescuesArctan) {
  DenseProblem p(
      1, [](const auto& x) { return std::vector<double>{std::atan(x[0])}; },
      [](const auto& x) { return std::vector<double>{1.0 / (1.0 + x[0] * x[0])}; });
  auto cfg = quiet();
  cfg.max_iter = 3;  // the full step diverges: 3, -9.5, 124, -2.4e4
  const auto plain = newton_solve(p, {3.0}, cfg);
  EXPECT_FALSE(plain.converged());
  EXPECT_EQ(plain.iterations, 3);
  EXPECT_EQ(plain.residual_norms.size(), 4u);
  EXPECT_EQ(plain.solution[0], 3.0);  // best iterate is the start
  cfg.max_iter = 30;
  cfg.linesearch = LineSearch::backtracking;
  const auto ls = newton_solve(p, {3.0}, cfg);
  EXPECT_TRUE(ls.converged());
  EXPECT_NEAR(ls.solution[0], 0.0, 1e-8);
}

TEST(Newton, RejectsBadConfig) {
  DenseProblem p(
      1, [](const auto& x) { return std::vector<double>{x[0]}; }, [](const auto&) { return std::vector<double>{1.0}; });
  auto cfg = quiet();
  cfg.max_iter = 0;
  EXPECT_THROW(newton_solve(p, {1.0}, cfg), ConfigurationError);
  EXPECT_THROW(newton_solve(p, {1.0, 2.0}, quiet()), IndexOutOfRange);
  DenseProblem nan(
      1, [](const auto&) { return std::vector<double>{std::nan("")}; }, [](const auto&) { return std::vector<double>{1.0}; });
  EXPECT_THROW(newton_solve(nan, {1.0}, quiet()), NonFiniteResidual);
}

TEST(Newton, StokesLimitConvergesInOneIteration) {
  const auto d = box_ust(4, 2);
  const Assembler a = flow_assembler(d, false);
  AssemblerProblem p(a);
  for (auto m : {LinearMethod::direct_lu, LinearMethod::gmres_restarted}) {
    const auto r = newton_solve(p, a.initial_guess(), quiet(m));
    EXPECT_TRUE(r.converged());
    EXPECT_EQ(r.iterations, 1);
  }
}

TEST(Newton, ZeroProblemStaysZero) {
  const auto d = box_ust(3, 2);
  BCSpec b;
  for (const char* t : {"xmin", "xmax", "ymin", "ymax"}) b.dirichlet.push_back({t, constant_field({0, 0, 0})});
  b.initial = constant_field({0, 0, 0});
  Physics ph;
  ph.material = {1.0, 0.1};
  const Assembler a(d, ph, b);
  AssemblerProblem p(a);
  const auto r = newton_solve(p, a.initial_guess(), quiet());
  EXPECT_TRUE(r.converged());
  EXPECT_LE(r.iterations, 1);
  for (double v : r.solution) EXPECT_EQ(v, 0.0);
}

TEST(Newton, NavierStokesConvergesAndIsDeterministic) {
  const auto d = box_ust(4, 2);
  const Assembler a = flow_assembler(d, true);
  AssemblerProblem p1(a), p2(a);
  const auto cfg = quiet(LinearMethod::gmres_restarted);
  const auto r1 = newton_solve(p1, a.initial_guess(), cfg);
  const auto r2 = newton_solve(p2, a.initial_guess(), cfg);
  ASSERT_TRUE(r1.converged());
  EXPECT_LE(r1.iterations, 6);
  EXPECT_EQ(r1.solution, r2.solution);
  EXPECT_EQ(r1.residual_norms, r2.residual_norms);
  // converged residual below the Newton tolerance
  EXPECT_LE(r1.residual_norms.back(), std::max(cfg.abs_tol, cfg.rel_tol * r1.residual_norms.front()));
}
