#pragma once

#include <span>
#include <vector>

namespace stfem {

/// Compressed-row sparse matrix with sorted column indices per row.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> values;

  int nnz() const noexcept { return static_cast<int>(col_idx.size()); }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;

  /// Pointer to entry (r, c), or nullptr when it is not in the pattern.
  double* find(int r, int c);
  const double* find(int r, int c) const;
  double at(int r, int c) const {
    const double* p = find(r, c);
    return p ? *p : 0.0;
  }

  void set_zero();
  /// Replaces row r by the identity row, keeping the pattern.
  void set_identity_row(int r);

  static CsrMatrix identity(int n);
  /// Builds from row-major dense data, dropping exact zeros.
  static CsrMatrix from_dense(int rows, int cols, std::span<const double> dense);
};

/// Node adjacency (including the node itself), sorted per node.
struct NodeGraph {
  std::vector<int> ptr{0};
  std::vector<int> adj;

  int num_nodes() const noexcept { return static_cast<int>(ptr.size()) - 1; }
  int degree(int n) const { return ptr[static_cast<std::size_t>(n) + 1] - ptr[static_cast<std::size_t>(n)]; }
  /// Position of `b` in the adjacency list of `a` (relative), or -1.
  int position(int a, int b) const;
};

/// Graph connecting all nodes that share an element; `connectivity` holds
/// `nodes_per_element` ids per element.
NodeGraph build_node_graph(int num_nodes, std::span<const int> connectivity, int nodes_per_element);

/// Scalar CSR pattern of a node-major block system with `block` unknowns per
/// node. Row (a, r) lists neighbors b in increasing order, components c
/// inner, so entry offsets follow directly from the node graph.
CsrMatrix block_pattern(const NodeGraph& graph, int block);

/// Offset of the (a, r) x (b_pos, c) entry in a block_pattern matrix.
inline int block_offset(const NodeGraph& g, int block, int a, int r, int b_pos, int c) {
  return block * block * g.ptr[static_cast<std::size_t>(a)] + r * block * g.degree(a) + b_pos * block + c;
}

/// Assembled Newton system: matrix, right-hand side and the unknown layout
/// (node-major, `block_size` unknowns per node).
struct LinearSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  int block_size = 1;
};

}  // namespace stfem
