#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stfem/config.hpp"
#include "stfem/error.hpp"
#include "stfem/extrude.hpp"
#include "stfem/mesh_io.hpp"
#include "stfem/postproc.hpp"
#include "stfem/scenario.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream is(t);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + tok + "'");
    }
  }
  return out;
}

std::vector<double> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stfem::IoFailure("cannot open " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    const auto v = parse_numbers(line);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void print_summary(const stfem::ScenarioSpec& spec, const stfem::RunResult& r) {
  std::fprintf(stderr, "case=%s mode=%s unknowns=%d solves=%zu divergence_l2=%.6e converged=%s\n", spec.name.c_str(),
               stfem::to_string(r.mode).c_str(), r.unknowns, r.newton.size(), r.divergence_l2,
               r.converged() ? "yes" : "no");
  for (std::size_t s = 0; s < r.newton.size(); ++s)
    std::fprintf(stderr, "solve=%zu newton_iterations=%d final_res=%.6e\n", s, r.newton[s].iterations,
                 r.newton[s].residual_norms.back());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time finite element solver for incompressible flow"};
  app.require_subcommand(1);

  // mesh-gen
  auto* gen = app.add_subcommand("mesh-gen", "Extrude a spatial mesh into a space-time simplex mesh");
  std::string gen_in, gen_out;
  int gen_levels = 1;
  double gen_omega = 0.0, gen_t0 = 0.0, gen_tend = 1.0;
  std::string gen_center = "0,0,0";
  std::string gen_axis = "0,0,1";
  int gen_layers = 0;
  double gen_thickness = 0.1;
  gen->add_option("--input", gen_in, "spatial mesh (stmesh)")->required();
  gen->add_option("--out", gen_out, "output space-time mesh")->required();
  gen->add_option("--levels", gen_levels, "number of time levels")->check(CLI::PositiveNumber);
  gen->add_option("--omega", gen_omega, "rigid rotation rate of the nodes");
  gen->add_option("--t0", gen_t0, "start time");
  gen->add_option("--t-end", gen_tend, "end time");
  gen->add_option("--center", gen_center, "rotation center x,y[,z]");
  gen->add_option("--axis", gen_axis, "rotation axis (3D)");
  gen->add_option("--layers", gen_layers,
                  "extrude a 2D input along z into this many tetrahedral layers and write the spatial 3D mesh");
  gen->add_option("--thickness", gen_thickness, "total z thickness for --layers");

  // run
  auto* run = app.add_subcommand("run", "Run a scenario");
  std::string run_case, run_config, run_mode, run_out = "out";
  int run_levels = 0;
  double run_dt = 0.0, run_tend = 0.0;
  bool run_quiet = false;
  run->add_option("--case", run_case, "builtin case name");
  run->add_option("--config", run_config, "scenario file (key = value)");
  auto* mode_opt = run->add_option("--mode", run_mode, "ust or slab")->check(CLI::IsMember({"ust", "slab"}));
  auto* levels_opt = run->add_option("--levels", run_levels, "UST time levels")->check(CLI::PositiveNumber);
  auto* dt_opt = run->add_option("--dt", run_dt, "slab size")->check(CLI::PositiveNumber);
  run->add_option("--t-end", run_tend, "end time");
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--quiet", run_quiet, "suppress Newton trace lines");

  // slice
  auto* slice = app.add_subcommand("slice", "Cut a result at a time and write VTK");
  std::string slice_result, slice_out;
  double slice_time = 0.0;
  slice->add_option("--result", slice_result, "result file")->required();
  slice->add_option("--time", slice_time, "slice time")->required();
  slice->add_option("--out", slice_out, "output .vtk")->required();

  // probe
  auto* prb = app.add_subcommand("probe", "Interpolate a result at (x, t) points");
  std::string prb_result, prb_points, prb_file, prb_out;
  prb->add_option("--result", prb_result, "result file")->required();
  auto* pts_opt = prb->add_option("--points", prb_points, "x,y[,z],t;... (semicolon separated points)");
  auto* ptsf_opt = prb->add_option("--points-file", prb_file, "CSV with one x,y[,z],t per line");
  pts_opt->excludes(ptsf_opt);
  prb->add_option("--out", prb_out, "output CSV (stdout when omitted)");

  // validate
  auto* val = app.add_subcommand("validate", "Check mesh conformity and orientation");
  std::string val_mesh;
  val->add_option("--mesh", val_mesh, "mesh file")->required();

  // convergence
  auto* conv = app.add_subcommand("convergence", "Refinement study against an exact solution");
  std::string conv_case = "manufactured", conv_mode = "ust", conv_factors = "1,2,4", conv_out, conv_config;
  conv->add_option("--case", conv_case, "builtin case");
  conv->add_option("--config", conv_config, "scenario file");
  conv->add_option("--mode", conv_mode, "ust or slab")->check(CLI::IsMember({"ust", "slab"}));
  conv->add_option("--factors", conv_factors, "refinement factors, e.g. 1,2,4");
  conv->add_option("--out", conv_out, "output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      const stfem::Mesh spatial = stfem::read_mesh(gen_in);
      if (gen_layers > 0) {
        if (spatial.dim() != 2) throw UsageError("--layers needs a 2D input mesh");
        stfem::write_mesh(gen_out, stfem::extrude_layers(spatial, 0.0, gen_thickness, gen_layers, "end_walls"));
        return 0;
      }
      const auto c = parse_numbers(gen_center);
      const auto a = parse_numbers(gen_axis);
      if (c.size() < 2 || a.size() < 3) throw UsageError("--center needs 2-3 numbers, --axis needs 3");
      stfem::ExtrusionSpec ex;
      ex.t0 = gen_t0;
      ex.tN = gen_tend;
      ex.levels = gen_levels;
      if (gen_omega != 0.0)
        ex.trajectory = stfem::NodeTrajectory::rotation(gen_omega, {c[0], c[1], c.size() > 2 ? c[2] : 0.0},
                                                        {a[0], a[1], a[2]});
      const auto st = stfem::extrude_simplex_st(spatial, ex);
      stfem::write_mesh(gen_out, st.mesh);
      std::fprintf(stderr, "space-time mesh: %d nodes, %d elements\n", st.mesh.num_nodes(), st.mesh.num_elements());
      return 0;
    }

    if (*run) {
      if (run_case.empty() && run_config.empty()) throw UsageError("run needs --case or --config");
      stfem::ScenarioSpec spec = run_config.empty() ? stfem::builtin_case(run_case) : stfem::read_config(run_config);
      if (!run_config.empty() && !run_case.empty() && run_case != spec.name)
        throw UsageError("--case and the config file name different cases");
      if (!mode_opt->empty()) spec.mode = stfem::parse_run_mode(run_mode);
      if (spec.mode == stfem::RunMode::ust && !dt_opt->empty())
        throw UsageError("--dt applies to slab mode; use --levels with --mode ust");
      if (spec.mode == stfem::RunMode::slab && !levels_opt->empty())
        throw UsageError("--levels applies to UST mode; use --dt with --mode slab");
      if (run_tend > 0.0) spec.t_end = run_tend;
      if (!levels_opt->empty()) spec.levels = run_levels;
      if (!dt_opt->empty()) spec.dt = run_dt;
      spec.newton.log = spec.slab_newton.log = !run_quiet;
      const stfem::RunResult r = stfem::run(spec, spec.mode);
      stfem::write_outputs(spec, r, run_out);
      print_summary(spec, r);
      return r.converged() ? 0 : kRuntimeError;
    }

    if (*slice) {
      const auto res = stfem::read_result(slice_result);
      const auto s = stfem::slice_at_time(res.mesh, res.field.values, res.field.components, slice_time);
      stfem::export_vtk(s, slice_out);
      std::fprintf(stderr, "slice t=%g: %d cells, measure %.12g\n", slice_time, s.num_cells(), s.measure());
      return 0;
    }

    if (*prb) {
      const auto res = stfem::read_result(prb_result);
      const std::vector<double> pts = !prb_file.empty() ? read_points_csv(prb_file) : parse_numbers(prb_points);
      const int dim = res.mesh.dim();
      if (pts.empty() || pts.size() % static_cast<std::size_t>(dim) != 0)
        throw UsageError("points must have " + std::to_string(dim) + " coordinates each");
      const auto vals = stfem::probe(res.mesh, res.field.values, res.field.components, pts);
      if (prb_out.empty()) {
        stfem::write_probe_csv(std::cout, dim - 1, pts, vals);
      } else {
        std::ofstream os(prb_out);
        if (!os) throw stfem::IoFailure("cannot open " + prb_out);
        stfem::write_probe_csv(os, dim - 1, pts, vals);
      }
      return 0;
    }

    if (*val) {
      const stfem::Mesh m = stfem::read_mesh(val_mesh);
      const auto report = stfem::validate_mesh(m);
      std::printf("mesh: dim=%d nodes=%d elements=%d boundary_facets=%zu\n", m.dim(), m.num_nodes(),
                  m.num_elements(), m.boundary().size());
      for (const auto& v : report.violations) std::printf("violation: %s\n", v.c_str());
      std::printf("%s\n", report.ok() ? "valid" : "invalid");
      return report.ok() ? 0 : kRuntimeError;
    }

    if (*conv) {
      stfem::ScenarioSpec spec = conv_config.empty() ? stfem::builtin_case(conv_case) : stfem::read_config(conv_config);
      spec.newton.log = spec.slab_newton.log = false;
      std::vector<int> factors;
      for (double f : parse_numbers(conv_factors)) {
        if (f < 1 || f != static_cast<int>(f)) throw UsageError("factors must be positive integers");
        factors.push_back(static_cast<int>(f));
      }
      const auto rows = stfem::convergence_study(spec, stfem::parse_run_mode(conv_mode), factors);
      if (conv_out.empty()) {
        stfem::write_convergence_csv(std::cout, rows);
      } else {
        std::ofstream os(conv_out);
        if (!os) throw stfem::IoFailure("cannot open " + conv_out);
        stfem::write_convergence_csv(os, rows);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageError;
  } catch (const stfem::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kUsageError;
}
