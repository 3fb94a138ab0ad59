#include "stfem/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "stfem/error.hpp"

namespace stfem {

namespace {

/// Reads logical lines, dropping comments and blank lines, tracking the
/// physical line number for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(line);
      return true;
    }
    return false;
  }

  std::istringstream require(const char* what) {
    std::istringstream ss;
    if (!next(ss)) throw ParseError(line_no_ + 1, std::string("unexpected end of file, expected ") + what);
    return ss;
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <class T>
T take(std::istringstream& ss, LineReader& r, const char* what) {
  T v{};
  if (!(ss >> v)) throw ParseError(r.line(), std::string("expected ") + what);
  return v;
}

void expect_end(std::istringstream& ss, LineReader& r) {
  std::string rest;
  if (ss >> rest) throw ParseError(r.line(), "trailing token '" + rest + "'");
}

Mesh read_mesh_block(LineReader& r) {
  auto head = r.require("stmesh header");
  const auto magic = take<std::string>(head, r, "'stmesh'");
  if (magic != "stmesh") throw ParseError(r.line(), "expected 'stmesh' header, got '" + magic + "'");
  const int dim = take<int>(head, r, "dimension");
  const long nn = take<long>(head, r, "node count");
  const long ne = take<long>(head, r, "element count");
  const long nf = take<long>(head, r, "facet count");
  expect_end(head, r);
  if (dim < 1 || dim > kMaxDim) throw ParseError(r.line(), "dimension must be in [1, 4]");
  if (nn < 0 || ne < 0 || nf < 0) throw ParseError(r.line(), "negative count");

  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(nn * dim));
  for (long i = 0; i < nn; ++i) {
    auto ss = r.require("node line");
    for (int d = 0; d < dim; ++d) coords.push_back(take<double>(ss, r, "coordinate"));
    expect_end(ss, r);
  }
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(ne * (dim + 1)));
  for (long e = 0; e < ne; ++e) {
    auto ss = r.require("element line");
    for (int k = 0; k <= dim; ++k) {
      const int id = take<int>(ss, r, "node id");
      if (id < 0 || id >= nn) throw ParseError(r.line(), "node id " + std::to_string(id) + " out of range");
      cells.push_back(id);
    }
    expect_end(ss, r);
  }
  std::vector<BoundaryFacet> facets;
  std::vector<std::string> tags;
  facets.reserve(static_cast<std::size_t>(nf));
  for (long f = 0; f < nf; ++f) {
    auto ss = r.require("boundary facet line");
    BoundaryFacet bf;
    for (int k = 0; k < dim; ++k) {
      const int id = take<int>(ss, r, "node id");
      if (id < 0 || id >= nn) throw ParseError(r.line(), "node id " + std::to_string(id) + " out of range");
      bf.nodes[static_cast<std::size_t>(k)] = id;
    }
    bf.tag = intern_tag(tags, take<std::string>(ss, r, "tag"));
    expect_end(ss, r);
    facets.push_back(bf);
  }
  return Mesh(dim, std::move(coords), std::move(cells), std::move(facets), std::move(tags));
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  LineReader r(in);
  return read_mesh_block(r);
}

Mesh read_mesh(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const int dim = mesh.dim();
  out << "stmesh " << dim << ' ' << mesh.num_nodes() << ' ' << mesh.num_elements() << ' '
      << mesh.boundary().size() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    auto x = mesh.node(i);
    for (int d = 0; d < dim; ++d) out << (d ? " " : "") << x[static_cast<std::size_t>(d)];
    out << '\n';
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    auto ids = mesh.element(e);
    for (int k = 0; k <= dim; ++k) out << (k ? " " : "") << ids[static_cast<std::size_t>(k)];
    out << '\n';
  }
  for (const auto& f : mesh.boundary()) {
    for (int k = 0; k < dim; ++k) out << f.nodes[static_cast<std::size_t>(k)] << ' ';
    out << (f.tag >= 0 ? mesh.tag_name(f.tag) : std::string("untagged")) << '\n';
  }
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  auto out = open_out(path);
  write_mesh(out, mesh);
  if (!out) throw IoFailure("write to '" + path.string() + "' failed");
}

void write_result(std::ostream& out, const Mesh& mesh, const NodalField& field) {
  if (field.components <= 0 ||
      field.values.size() != static_cast<std::size_t>(mesh.num_nodes()) * static_cast<std::size_t>(field.components))
    throw Error("field size does not match mesh");
  write_mesh(out, mesh);
  out << "field " << mesh.num_nodes() << ' ' << field.components << '\n' << std::setprecision(17);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    for (int c = 0; c < field.components; ++c)
      out << (c ? " " : "") << field.values[static_cast<std::size_t>(i * field.components + c)];
    out << '\n';
  }
}

void write_result(const std::filesystem::path& path, const Mesh& mesh, const NodalField& field) {
  auto out = open_out(path);
  write_result(out, mesh, field);
  if (!out) throw IoFailure("write to '" + path.string() + "' failed");
}

ResultFile read_result(std::istream& in) {
  LineReader r(in);
  ResultFile res;
  res.mesh = read_mesh_block(r);
  auto head = r.require("field header");
  if (take<std::string>(head, r, "'field'") != "field") throw ParseError(r.line(), "expected 'field' header");
  const int nn = take<int>(head, r, "node count");
  const int nc = take<int>(head, r, "component count");
  expect_end(head, r);
  if (nn != res.mesh.num_nodes()) throw ParseError(r.line(), "field node count does not match mesh");
  if (nc <= 0) throw ParseError(r.line(), "component count must be positive");
  res.field.components = nc;
  res.field.values.reserve(static_cast<std::size_t>(nn) * static_cast<std::size_t>(nc));
  for (int i = 0; i < nn; ++i) {
    auto ss = r.require("field row");
    for (int c = 0; c < nc; ++c) res.field.values.push_back(take<double>(ss, r, "field value"));
    expect_end(ss, r);
  }
  return res;
}

ResultFile read_result(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_result(in);
}

}  // namespace stfem
