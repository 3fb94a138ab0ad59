#include "stfem/sparse.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "stfem/error.hpp"

namespace stfem {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int k = row_ptr[static_cast<std::size_t>(r)]; k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
      s += values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(r)] = s;
  }
}

const double* CsrMatrix::find(int r, int c) const {
  if (r < 0 || r >= rows) return nullptr;
  const auto begin = col_idx.begin() + row_ptr[static_cast<std::size_t>(r)];
  const auto end = col_idx.begin() + row_ptr[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return nullptr;
  return values.data() + (it - col_idx.begin());
}

double* CsrMatrix::find(int r, int c) { return const_cast<double*>(std::as_const(*this).find(r, c)); }

void CsrMatrix::set_zero() { std::fill(values.begin(), values.end(), 0.0); }

void CsrMatrix::set_identity_row(int r) {
  for (int k = row_ptr[static_cast<std::size_t>(r)]; k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k)
    values[static_cast<std::size_t>(k)] = col_idx[static_cast<std::size_t>(k)] == r ? 1.0 : 0.0;
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) m.row_ptr[static_cast<std::size_t>(i)] = i;
  m.col_idx.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m.col_idx[static_cast<std::size_t>(i)] = i;
  m.values.assign(static_cast<std::size_t>(n), 1.0);
  return m;
}

CsrMatrix CsrMatrix::from_dense(int rows, int cols, std::span<const double> dense) {
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = dense[static_cast<std::size_t>(r) * cols + c];
      if (v != 0.0) {
        m.col_idx.push_back(c);
        m.values.push_back(v);
      }
    }
    m.row_ptr.push_back(static_cast<int>(m.col_idx.size()));
  }
  return m;
}

int NodeGraph::position(int a, int b) const {
  const auto begin = adj.begin() + ptr[static_cast<std::size_t>(a)];
  const auto end = adj.begin() + ptr[static_cast<std::size_t>(a) + 1];
  const auto it = std::lower_bound(begin, end, b);
  return (it != end && *it == b) ? static_cast<int>(it - begin) : -1;
}

NodeGraph build_node_graph(int num_nodes, std::span<const int> connectivity, int nodes_per_element) {
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(num_nodes));
  for (int n = 0; n < num_nodes; ++n) nbr[static_cast<std::size_t>(n)].push_back(n);
  for (std::size_t s = 0; s < connectivity.size(); s += static_cast<std::size_t>(nodes_per_element)) {
    for (int i = 0; i < nodes_per_element; ++i) {
      const int a = connectivity[s + static_cast<std::size_t>(i)];
      if (a < 0 || a >= num_nodes) throw IndexOutOfRange("connectivity references node " + std::to_string(a));
      for (int j = 0; j < nodes_per_element; ++j)
        if (i != j) nbr[static_cast<std::size_t>(a)].push_back(connectivity[s + static_cast<std::size_t>(j)]);
    }
  }
  NodeGraph g;
  g.ptr.reserve(static_cast<std::size_t>(num_nodes) + 1);
  for (auto& list : nbr) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.adj.insert(g.adj.end(), list.begin(), list.end());
    g.ptr.push_back(static_cast<int>(g.adj.size()));
  }
  return g;
}

CsrMatrix block_pattern(const NodeGraph& graph, int block) {
  CsrMatrix m;
  const int nn = graph.num_nodes();
  m.rows = m.cols = nn * block;
  m.row_ptr.assign(static_cast<std::size_t>(m.rows) + 1, 0);
  m.col_idx.reserve(graph.adj.size() * static_cast<std::size_t>(block * block));
  for (int a = 0; a < nn; ++a) {
    for (int r = 0; r < block; ++r) {
      for (int k = graph.ptr[static_cast<std::size_t>(a)]; k < graph.ptr[static_cast<std::size_t>(a) + 1]; ++k)
        for (int c = 0; c < block; ++c) m.col_idx.push_back(graph.adj[static_cast<std::size_t>(k)] * block + c);
      m.row_ptr[static_cast<std::size_t>(a * block + r) + 1] = static_cast<int>(m.col_idx.size());
    }
  }
  m.values.assign(m.col_idx.size(), 0.0);
  return m;
}

}  // namespace stfem
