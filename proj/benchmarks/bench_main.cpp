#include <numbers>

#include <benchmark/benchmark.h>

#include "stfem/assembly.hpp"
#include "stfem/discretization.hpp"
#include "stfem/extrude.hpp"
#include "stfem/postproc.hpp"
#include "stfem/scenario.hpp"
#include "stfem/solver.hpp"

using namespace stfem;

namespace {

const Mesh& stirrer_mesh() {
  static const Mesh m = load_spatial_mesh(builtin_case("stirrer2d"));
  return m;
}

ExtrusionSpec stirrer_extrusion(int levels) {
  ExtrusionSpec ex;
  ex.levels = levels;
  ex.tN = levels * 0.00012;
  ex.trajectory = NodeTrajectory::rotation(250 * std::numbers::pi / 3);
  return ex;
}

void BM_ExtrudeStirrer(benchmark::State& state) {
  const auto ex = stirrer_extrusion(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extrude_simplex_st(stirrer_mesh(), ex));
  state.SetItemsProcessed(state.iterations() * stirrer_mesh().num_elements() * state.range(0) * 3);
}
BENCHMARK(BM_ExtrudeStirrer)->Arg(4)->Arg(17)->Unit(benchmark::kMillisecond);

struct UstProblem {
  Discretization disc;
  Assembler assembler;
  std::vector<double> x;
  explicit UstProblem(int levels)
      : disc(discretize_ust(extrude_simplex_st(stirrer_mesh(), stirrer_extrusion(levels)))),
        assembler(disc, physics(builtin_case("stirrer2d")), boundary_conditions(builtin_case("stirrer2d"))),
        x(assembler.initial_guess()) {}
};

void BM_AssembleResidual(benchmark::State& state) {
  UstProblem p(static_cast<int>(state.range(0)));
  const auto tau = p.assembler.compute_tau(p.x);
  for (auto _ : state) benchmark::DoNotOptimize(p.assembler.residual(p.x, tau));
  state.SetItemsProcessed(state.iterations() * p.disc.num_elements());
}
BENCHMARK(BM_AssembleResidual)->Arg(4)->Arg(17)->Unit(benchmark::kMillisecond);

void BM_AssembleJacobian(benchmark::State& state) {
  UstProblem p(static_cast<int>(state.range(0)));
  const auto tau = p.assembler.compute_tau(p.x);
  for (auto _ : state) benchmark::DoNotOptimize(p.assembler.linearize(p.x, tau));
  state.SetItemsProcessed(state.iterations() * p.disc.num_elements());
}
BENCHMARK(BM_AssembleJacobian)->Arg(4)->Arg(17)->Unit(benchmark::kMillisecond);

void BM_SliceStirrer(benchmark::State& state) {
  const auto st = extrude_simplex_st(stirrer_mesh(), stirrer_extrusion(17));
  const std::vector<double> f(static_cast<std::size_t>(st.mesh.num_nodes()) * 3, 1.0);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(slice_at_time(st.mesh, f, 3, st.t0 + t * (st.tN - st.t0)));
    t = t > 0.9 ? 0.013 : t + 0.071;
  }
}
BENCHMARK(BM_SliceStirrer)->Unit(benchmark::kMillisecond);

void BM_ProbeStirrer(benchmark::State& state) {
  const auto st = extrude_simplex_st(stirrer_mesh(), stirrer_extrusion(17));
  const std::vector<double> f(static_cast<std::size_t>(st.mesh.num_nodes()) * 3, 1.0);
  const auto spec = builtin_case("stirrer2d");
  std::vector<double> pts;
  for (int k = 0; k <= 16; ++k) {
    const double t = k * 0.00012;
    for (const auto& p : stirrer_side_probes(spec, t)) pts.insert(pts.end(), {p[0], p[1], t});
  }
  for (auto _ : state) benchmark::DoNotOptimize(probe(st.mesh, f, 3, pts));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size() / 3));
}
BENCHMARK(BM_ProbeStirrer)->Unit(benchmark::kMillisecond);

void BM_LinearSolveSlab(benchmark::State& state) {
  const auto spec = builtin_case("stirrer2d");
  const Mesh& m = stirrer_mesh();
  const auto top = rigid_rotation_positions(m, mesh_trajectory(spec), 0.0, spec.dt);
  const auto disc = discretize_slab(m, m.coords(), top, 0.0, spec.dt);
  Assembler a(disc, physics(spec), boundary_conditions(spec));
  a.set_previous_state(std::vector<double>(static_cast<std::size_t>(m.num_nodes()) * 2, 0.0));
  const auto x = a.initial_guess();
  const auto sys = a.linearize(x, a.compute_tau(x));
  LinearSolverConfig cfg;
  cfg.method = state.range(0) ? LinearMethod::direct_lu : LinearMethod::gmres_restarted;
  for (auto _ : state) benchmark::DoNotOptimize(linear_solve(sys, cfg));
}
BENCHMARK(BM_LinearSolveSlab)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
