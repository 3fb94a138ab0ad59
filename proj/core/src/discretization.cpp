#include "stfem/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stfem/error.hpp"

namespace stfem {

int Discretization::tag_id(const std::string& name) const {
  auto it = std::find(tags.begin(), tags.end(), name);
  return it == tags.end() ? -1 : static_cast<int>(it - tags.begin());
}

Discretization discretize_ust(const SpaceTimeMesh& st) {
  const Mesh& m = st.mesh;
  Discretization d;
  d.nsd = m.dim() - 1;
  if (d.nsd < 2 || d.nsd > 3) throw Error("UST discretization needs a 3D or 4D space-time mesh");
  d.family = ElementFamily::simplex;
  d.nodes_per_element = m.nodes_per_element();
  d.coords = m.coords();
  d.connectivity = m.cells();
  d.tags = m.tag_names();

  // Time levels: sort distinct node times, merging within tolerance.
  const int nn = m.num_nodes();
  const double tol = 1e-10 * std::max(1.0, std::abs(st.tN - st.t0));
  std::vector<int> order(nn);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return st.time(a) < st.time(b); });
  d.node_level.assign(nn, 0);
  int level = -1;
  double last = 0.0;
  for (int i : order) {
    const double t = st.time(i);
    if (level < 0 || t - last > tol) {
      ++level;
      last = t;
    }
    d.node_level[i] = level;
  }
  d.num_levels = level + 1;

  for (int f : st.bottom_facets) {
    const auto& bf = m.boundary()[f];
    for (int k = 0; k < m.dim(); ++k) d.bottom_facets.push_back(bf.nodes[k]);
  }
  for (int f : st.mantle_facets) {
    const auto& bf = m.boundary()[f];
    MantleFacet mf;
    mf.count = m.dim();
    for (int k = 0; k < m.dim(); ++k) mf.nodes[k] = bf.nodes[k];
    mf.tag = bf.tag;
    d.mantle.push_back(mf);
  }
  return d;
}

Discretization discretize_slab(const Mesh& spatial, std::span<const double> bottom_pos,
                               std::span<const double> top_pos, double t_bottom, double t_top) {
  const int nsd = spatial.dim();
  const int n = spatial.num_nodes();
  if (nsd < 2 || nsd > 3) throw Error("slab discretization needs a 2D or 3D spatial mesh");
  if (bottom_pos.size() != spatial.coords().size() || top_pos.size() != spatial.coords().size())
    throw Error("slab node positions do not match the spatial mesh");
  if (!(t_top > t_bottom)) throw Error("slab needs t_top > t_bottom");

  Discretization d;
  d.nsd = nsd;
  d.family = ElementFamily::prism;
  d.nodes_per_element = 2 * (nsd + 1);
  d.tags = spatial.tag_names();
  d.coords.reserve(2 * n * (nsd + 1));
  for (int level = 0; level < 2; ++level) {
    const auto& pos = level == 0 ? bottom_pos : top_pos;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < nsd; ++c) d.coords.push_back(pos[i * nsd + c]);
      d.coords.push_back(level == 0 ? t_bottom : t_top);
    }
  }
  d.node_level.assign(n, 0);
  d.node_level.resize(2 * n, 1);
  d.num_levels = 2;
  for (int e = 0; e < spatial.num_elements(); ++e) {
    auto ids = spatial.element(e);
    for (int id : ids) d.connectivity.push_back(id);
    for (int id : ids) d.connectivity.push_back(id + n);
    for (int id : ids) d.bottom_facets.push_back(id);
  }
  for (const auto& sf : spatial.boundary()) {
    MantleFacet mf;
    mf.count = 2 * nsd;
    for (int k = 0; k < nsd; ++k) {
      mf.nodes[k] = sf.nodes[k];
      mf.nodes[nsd + k] = sf.nodes[k] + n;
    }
    mf.tag = sf.tag;
    d.mantle.push_back(mf);
  }
  return d;
}

}  // namespace stfem
