#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "stfem/mesh.hpp"

namespace stfem {

enum class ElementFamily { simplex, prism };

/// Lateral boundary piece of a space-time discretization. Simplex facets use
/// n_sd + 1 nodes; prism facets use 2 n_sd nodes (bottom ids, then top ids).
struct MantleFacet {
  std::array<int, 6> nodes{};
  int count = 0;
  int tag = -1;
};

/// The element set one nonlinear solve integrates over: either the simplices
/// of a whole unstructured space-time mesh, or the tensor-product prisms of a
/// single time slab (nodes 0..n-1 at the bottom level, n..2n-1 at the top).
struct Discretization {
  int nsd = 2;
  ElementFamily family = ElementFamily::simplex;
  int nodes_per_element = 0;
  std::vector<double> coords;     // n_sd + 1 per node, time last
  std::vector<int> connectivity;  // nodes_per_element per element
  std::vector<int> node_level;    // time level index of every node
  int num_levels = 0;
  std::vector<int> bottom_facets;  // n_sd + 1 node ids per bottom-cap simplex
  std::vector<MantleFacet> mantle;
  std::vector<std::string> tags;

  int dim() const noexcept { return nsd + 1; }
  int num_nodes() const noexcept { return static_cast<int>(coords.size()) / (nsd + 1); }
  int num_elements() const noexcept { return static_cast<int>(connectivity.size()) / nodes_per_element; }
  int num_bottom_facets() const noexcept { return static_cast<int>(bottom_facets.size()) / (nsd + 1); }
  std::span<const double> node(int i) const { return {coords.data() + static_cast<std::size_t>(i) * (nsd + 1), static_cast<std::size_t>(nsd + 1)}; }
  std::span<const int> element(int e) const {
    return {connectivity.data() + static_cast<std::size_t>(e) * nodes_per_element, static_cast<std::size_t>(nodes_per_element)};
  }
  int tag_id(const std::string& name) const;
};

/// Simplicial discretization of a whole space-time mesh. Nodes are grouped
/// into time levels by their time coordinate (tolerance relative to the span).
Discretization discretize_ust(const SpaceTimeMesh& st);

/// Tensor-product discretization of one slab: the spatial mesh connectivity
/// with node positions `bottom_pos` at t_bottom and `top_pos` at t_top.
Discretization discretize_slab(const Mesh& spatial, std::span<const double> bottom_pos,
                               std::span<const double> top_pos, double t_bottom, double t_top);

}  // namespace stfem
