#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

// The `stmesh` format is ASCII and line oriented; `#` starts a comment.
//
//   stmesh <dim> <n_nodes> <n_elements> <n_boundary_facets>
//   <dim floats>                      x n_nodes
//   <dim+1 zero-based node ids>       x n_elements
//   <dim node ids> <tag>              x n_boundary_facets
//
// Floats are written with 17 significant digits so a write/read cycle is
// bitwise exact.

Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

/// Nodal field attached to a mesh: `components` values per node, node-major.
struct NodalField {
  int components = 0;
  std::vector<double> values;
};

/// A result file is a `stmesh` block followed by
///   field <n_nodes> <n_components>
/// and one row of components per node.
struct ResultFile {
  Mesh mesh;
  NodalField field;
};

void write_result(std::ostream& out, const Mesh& mesh, const NodalField& field);
void write_result(const std::filesystem::path& path, const Mesh& mesh, const NodalField& field);
ResultFile read_result(std::istream& in);
ResultFile read_result(const std::filesystem::path& path);

}  // namespace stfem
