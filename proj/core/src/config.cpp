#include "stfem/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stfem/error.hpp"

namespace stfem {

namespace {

struct Entry {
  int line;
  std::string key;  // section.key
  std::string value;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const Entry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(e.line, "'" + e.value + "' is not a number");
  return v;
}

int to_int(const Entry& e) {
  int v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(e.line, "'" + e.value + "' is not an integer");
  return v;
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
  throw ParseError(e.line, "'" + e.value + "' is not a boolean");
}

std::vector<double> to_list(const Entry& e) {
  std::string s = e.value;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    Entry t{e.line, e.key, tok};
    out.push_back(to_double(t));
  }
  return out;
}

Vec3 to_vec3(const Entry& e) {
  const auto v = to_list(e);
  if (v.size() < 2 || v.size() > 3) throw ParseError(e.line, "expected 2 or 3 numbers");
  return {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
}

template <typename Enum>
Enum to_enum(const Entry& e, std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, value] : options)
    if (e.value == name) return value;
  throw ParseError(e.line, "invalid value '" + e.value + "'");
}

using Setter = std::function<void(ScenarioSpec&, const Entry&)>;

void both_newton(ScenarioSpec& s, const std::function<void(NewtonConfig&)>& f) {
  f(s.newton);
  f(s.slab_newton);
}

const std::unordered_map<std::string, Setter>& setters() {
  static const std::unordered_map<std::string, Setter> m = {
      {"scenario.case", [](ScenarioSpec&, const Entry&) {}},
      {"scenario.name", [](ScenarioSpec& s, const Entry& e) { s.name = e.value; }},
      {"scenario.mode",
       [](ScenarioSpec& s, const Entry& e) {
         s.mode = to_enum<RunMode>(e, {{"ust", RunMode::ust}, {"slab", RunMode::slab}});
       }},
      {"mesh.file",
       [](ScenarioSpec& s, const Entry& e) {
         s.geometry.kind = GeometrySpec::Kind::file;
         s.geometry.mesh_file = e.value;
       }},
      {"mesh.nx", [](ScenarioSpec& s, const Entry& e) { s.geometry.nx = to_int(e); }},
      {"mesh.ny", [](ScenarioSpec& s, const Entry& e) { s.geometry.ny = to_int(e); }},
      {"mesh.x0", [](ScenarioSpec& s, const Entry& e) { s.geometry.x0 = to_double(e); }},
      {"mesh.x1", [](ScenarioSpec& s, const Entry& e) { s.geometry.x1 = to_double(e); }},
      {"mesh.y0", [](ScenarioSpec& s, const Entry& e) { s.geometry.y0 = to_double(e); }},
      {"mesh.y1", [](ScenarioSpec& s, const Entry& e) { s.geometry.y1 = to_double(e); }},
      {"mesh.r_inner", [](ScenarioSpec& s, const Entry& e) { s.geometry.r_inner = to_double(e); }},
      {"mesh.r_outer", [](ScenarioSpec& s, const Entry& e) { s.geometry.r_outer = to_double(e); }},
      {"mesh.n_r", [](ScenarioSpec& s, const Entry& e) { s.geometry.n_r = to_int(e); }},
      {"mesh.n_theta", [](ScenarioSpec& s, const Entry& e) { s.geometry.n_theta = to_int(e); }},
      {"mesh.refine", [](ScenarioSpec& s, const Entry& e) { s.geometry.refine = to_int(e); }},
      {"mesh.layers", [](ScenarioSpec& s, const Entry& e) { s.geometry.layers = to_int(e); }},
      {"mesh.thickness", [](ScenarioSpec& s, const Entry& e) { s.geometry.thickness = to_double(e); }},
      {"material.rho", [](ScenarioSpec& s, const Entry& e) { s.material.rho = to_double(e); }},
      {"material.mu", [](ScenarioSpec& s, const Entry& e) { s.material.mu = to_double(e); }},
      {"motion.omega", [](ScenarioSpec& s, const Entry& e) { s.omega = to_double(e); }},
      {"motion.center", [](ScenarioSpec& s, const Entry& e) { s.center = to_vec3(e); }},
      {"motion.axis", [](ScenarioSpec& s, const Entry& e) { s.axis = to_vec3(e); }},
      {"motion.rotate_mesh", [](ScenarioSpec& s, const Entry& e) { s.rotate_mesh = to_bool(e); }},
      {"time.t0", [](ScenarioSpec& s, const Entry& e) { s.t0 = to_double(e); }},
      {"time.t_end", [](ScenarioSpec& s, const Entry& e) { s.t_end = to_double(e); }},
      {"time.levels", [](ScenarioSpec& s, const Entry& e) { s.levels = to_int(e); }},
      {"time.dt", [](ScenarioSpec& s, const Entry& e) { s.dt = to_double(e); }},
      {"physics.convection", [](ScenarioSpec& s, const Entry& e) { s.convection = to_bool(e); }},
      {"physics.c_i", [](ScenarioSpec& s, const Entry& e) { s.c_i = to_double(e); }},
      {"physics.inflow", [](ScenarioSpec& s, const Entry& e) { s.inflow = to_double(e); }},
      {"solver.abs_tol",
       [](ScenarioSpec& s, const Entry& e) { both_newton(s, [v = to_double(e)](NewtonConfig& n) { n.abs_tol = v; }); }},
      {"solver.rel_tol",
       [](ScenarioSpec& s, const Entry& e) { both_newton(s, [v = to_double(e)](NewtonConfig& n) { n.rel_tol = v; }); }},
      {"solver.max_iter",
       [](ScenarioSpec& s, const Entry& e) { both_newton(s, [v = to_int(e)](NewtonConfig& n) { n.max_iter = v; }); }},
      {"solver.linesearch",
       [](ScenarioSpec& s, const Entry& e) {
         const auto v = to_enum<LineSearch>(e, {{"none", LineSearch::none}, {"backtracking", LineSearch::backtracking}});
         both_newton(s, [v](NewtonConfig& n) { n.linesearch = v; });
       }},
      {"solver.linear_method",
       [](ScenarioSpec& s, const Entry& e) {
         const auto v = to_enum<LinearMethod>(
             e, {{"gmres_restarted", LinearMethod::gmres_restarted}, {"direct_lu", LinearMethod::direct_lu}});
         both_newton(s, [v](NewtonConfig& n) { n.linear.method = v; });
       }},
      {"solver.restart",
       [](ScenarioSpec& s, const Entry& e) {
         both_newton(s, [v = to_int(e)](NewtonConfig& n) { n.linear.restart = v; });
       }},
      {"solver.max_krylov_iter",
       [](ScenarioSpec& s, const Entry& e) {
         both_newton(s, [v = to_int(e)](NewtonConfig& n) { n.linear.max_krylov_iter = v; });
       }},
      {"solver.lin_rel_tol",
       [](ScenarioSpec& s, const Entry& e) {
         both_newton(s, [v = to_double(e)](NewtonConfig& n) { n.linear.lin_rel_tol = v; });
       }},
      {"solver.preconditioner",
       [](ScenarioSpec& s, const Entry& e) {
         const auto v = to_enum<Preconditioner>(e, {{"ilu0", Preconditioner::ilu0},
                                                    {"jacobi_block", Preconditioner::jacobi_block},
                                                    {"none", Preconditioner::none}});
         both_newton(s, [v](NewtonConfig& n) { n.linear.preconditioner = v; });
       }},
      {"output.probes", [](ScenarioSpec& s, const Entry& e) { s.probe_points = to_list(e); }},
      {"output.probe_time", [](ScenarioSpec& s, const Entry& e) { s.probe_time = to_double(e); }},
      {"output.vtk", [](ScenarioSpec& s, const Entry& e) { s.write_vtk = to_bool(e); }},
  };
  return m;
}

}  // namespace

ScenarioSpec read_config(std::istream& in) {
  std::vector<Entry> entries;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(line, "unterminated section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (section.empty()) throw ParseError(line, "empty section name");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key");
    if (value.empty()) throw ParseError(line, "missing value for '" + key + "'");
    const std::string full = section.empty() ? "scenario." + key : section + "." + key;
    if (!setters().count(full)) throw UnknownKey(line, section.empty() ? key : full);
    entries.push_back({line, full, value});
  }

  std::string case_name = "stirrer2d";
  for (const auto& e : entries)
    if (e.key == "scenario.case") case_name = e.value;
  ScenarioSpec spec;
  try {
    spec = builtin_case(case_name);
  } catch (const ConfigurationError& err) {
    int l = 0;
    for (const auto& e : entries)
      if (e.key == "scenario.case") l = e.line;
    throw ParseError(l, err.what());
  }
  for (const auto& e : entries) setters().at(e.key)(spec, e);
  return spec;
}

ScenarioSpec read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  return read_config(in);
}

}  // namespace stfem
