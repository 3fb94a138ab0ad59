#include "stfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "stfem/error.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

namespace {

using FaceKey = std::array<int, kMaxDim>;

FaceKey sorted_key(std::span<const int> ids) {
  FaceKey key{-1, -1, -1, -1};
  std::copy(ids.begin(), ids.end(), key.begin());
  std::sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(ids.size()));
  return key;
}

/// Face `omit` of an element: all nodes except local node `omit`.
FaceKey element_face(std::span<const int> elem, int omit) {
  std::array<int, kMaxDim> ids{};
  int k = 0;
  for (int i = 0; i < static_cast<int>(elem.size()); ++i) {
    if (i != omit) ids[static_cast<std::size_t>(k++)] = elem[static_cast<std::size_t>(i)];
  }
  return sorted_key({ids.data(), static_cast<std::size_t>(k)});
}

struct FaceRecord {
  FaceKey key;
  int element;
};

std::vector<FaceRecord> all_faces(const Mesh& mesh) {
  std::vector<FaceRecord> faces;
  faces.reserve(static_cast<std::size_t>(mesh.num_elements()) * static_cast<std::size_t>(mesh.nodes_per_element()));
  for (int e = 0; e < mesh.num_elements(); ++e) {
    auto elem = mesh.element(e);
    for (int f = 0; f < mesh.nodes_per_element(); ++f) faces.push_back({element_face(elem, f), e});
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
    return a.key < b.key || (a.key == b.key && a.element < b.element);
  });
  return faces;
}

}  // namespace

int intern_tag(std::vector<std::string>& tags, std::string_view name) {
  auto it = std::find(tags.begin(), tags.end(), name);
  if (it != tags.end()) return static_cast<int>(it - tags.begin());
  tags.emplace_back(name);
  return static_cast<int>(tags.size()) - 1;
}

double degeneracy_threshold(double max_edge, int dim) { return 1e-14 * std::pow(max_edge, dim); }

Mesh::Mesh(int dim, std::vector<double> coords, std::vector<int> cells,
           std::vector<BoundaryFacet> facets, std::vector<std::string> tag_names)
    : dim_(dim),
      coords_(std::move(coords)),
      cells_(std::move(cells)),
      facets_(std::move(facets)),
      tags_(std::move(tag_names)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw Error("mesh dimension must be in [1, 4]");
  if (coords_.size() % static_cast<std::size_t>(dim_) != 0)
    throw Error("coordinate array length is not a multiple of the dimension");
  if (cells_.size() % static_cast<std::size_t>(dim_ + 1) != 0)
    throw Error("connectivity array length is not a multiple of dim + 1");

  const int nn = num_nodes();
  for (int id : cells_) {
    if (id < 0 || id >= nn) throw IndexOutOfRange("element references node " + std::to_string(id));
  }
  for (const auto& f : facets_) {
    for (int k = 0; k < dim_; ++k) {
      const int id = f.nodes[static_cast<std::size_t>(k)];
      if (id < 0 || id >= nn) throw IndexOutOfRange("boundary facet references node " + std::to_string(id));
    }
    if (f.tag < -1 || f.tag >= static_cast<int>(tags_.size())) throw IndexOutOfRange("boundary tag id out of range");
  }

  for (int e = 0; e < num_elements(); ++e) {
    int* ids = cells_.data() + static_cast<std::size_t>(e) * (dim_ + 1);
    for (int i = 0; i <= dim_; ++i)
      for (int j = i + 1; j <= dim_; ++j)
        if (ids[i] == ids[j]) throw DegenerateElement(e, "element " + std::to_string(e) + " repeats a node");
    const double det = detail::signed_volume_det(coords_.data(), ids, dim_);
    const double h = max_edge_length(e);
    if (std::abs(det) < degeneracy_threshold(h, dim_) || !std::isfinite(det))
      throw DegenerateElement(e, "element " + std::to_string(e) + " is degenerate");
    if (det < 0) std::swap(ids[0], ids[1]);
  }

  if (facets_.empty()) return;
  // Resolve facet owners: sort facet keys, then probe with every element face.
  std::vector<std::pair<FaceKey, int>> keys;
  keys.reserve(facets_.size());
  for (int i = 0; i < static_cast<int>(facets_.size()); ++i) {
    const auto& f = facets_[static_cast<std::size_t>(i)];
    keys.emplace_back(sorted_key({f.nodes.data(), static_cast<std::size_t>(dim_)}), i);
  }
  std::sort(keys.begin(), keys.end());
  for (auto& f : facets_) f.owner = -1;
  for (int e = 0; e < num_elements(); ++e) {
    auto elem = element(e);
    for (int lf = 0; lf <= dim_; ++lf) {
      const FaceKey key = element_face(elem, lf);
      auto it = std::lower_bound(keys.begin(), keys.end(), std::make_pair(key, -1));
      for (; it != keys.end() && it->first == key; ++it) {
        auto& f = facets_[static_cast<std::size_t>(it->second)];
        if (f.owner < 0) f.owner = e;
      }
    }
  }
  for (std::size_t i = 0; i < facets_.size(); ++i) {
    if (facets_[i].owner < 0)
      throw MeshTopologyError("boundary facet " + std::to_string(i) + " is not a face of any element");
  }
}

int Mesh::tag_id(std::string_view name) const {
  auto it = std::find(tags_.begin(), tags_.end(), name);
  return it == tags_.end() ? -1 : static_cast<int>(it - tags_.begin());
}

double Mesh::max_edge_length(int e) const {
  auto ids = element(e);
  double h2 = 0.0;
  for (int i = 0; i <= dim_; ++i) {
    for (int j = i + 1; j <= dim_; ++j) {
      auto a = node(ids[static_cast<std::size_t>(i)]);
      auto b = node(ids[static_cast<std::size_t>(j)]);
      double s = 0.0;
      for (int d = 0; d < dim_; ++d) s += (a[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)]) *
                                          (a[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)]);
      h2 = std::max(h2, s);
    }
  }
  return std::sqrt(h2);
}

ElementJacobian element_jacobian(const Mesh& mesh, int e) {
  if (e < 0 || e >= mesh.num_elements()) throw IndexOutOfRange("element id " + std::to_string(e));
  const int d = mesh.dim();
  auto ids = mesh.element(e);
  ElementJacobian out;
  out.J.resize(d, d);
  auto x0 = mesh.node(ids[0]);
  for (int c = 0; c < d; ++c) {
    auto xc = mesh.node(ids[static_cast<std::size_t>(c + 1)]);
    for (int r = 0; r < d; ++r) out.J(r, c) = xc[static_cast<std::size_t>(r)] - x0[static_cast<std::size_t>(r)];
  }
  out.det = out.J.determinant();
  if (std::abs(out.det) < degeneracy_threshold(mesh.max_edge_length(e), d))
    throw DegenerateElement(e, "element " + std::to_string(e) + " is degenerate");
  return out;
}

double element_measure(const Mesh& mesh, int e) {
  return std::abs(element_jacobian(mesh, e).det) / detail::factorial(mesh.dim());
}

double mesh_measure(const Mesh& mesh) {
  double sum = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) sum += element_measure(mesh, e);
  return sum;
}

Eigen::VectorXd basis_eval(std::span<const double> xi) {
  const auto d = static_cast<Eigen::Index>(xi.size());
  Eigen::VectorXd n(d + 1);
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    n(k + 1) = xi[static_cast<std::size_t>(k)];
    s += xi[static_cast<std::size_t>(k)];
  }
  n(0) = 1.0 - s;
  return n;
}

bool in_reference_simplex(std::span<const double> xi, double tol) {
  double s = 0.0;
  for (double v : xi) {
    if (v < -tol) return false;
    s += v;
  }
  return s <= 1.0 + tol;
}

Eigen::MatrixXd basis_gradients(const Mesh& mesh, int e) {
  const auto jac = element_jacobian(mesh, e);
  const int d = mesh.dim();
  // Reference gradients: grad N_1 = -1, grad N_{k+1} = e_k.
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(d + 1, d);
  ref.row(0).setConstant(-1.0);
  ref.bottomRows(d).setIdentity();
  // grad_x N = J^{-T} grad_xi N  ->  rows: ref * J^{-1}
  return ref * jac.J.inverse();
}

Eigen::VectorXd map_local_to_global(const Mesh& mesh, int e, std::span<const double> xi) {
  const int d = mesh.dim();
  if (static_cast<int>(xi.size()) != d) throw Error("reference point has wrong dimension");
  const Eigen::VectorXd n = basis_eval(xi);
  auto ids = mesh.element(e);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int k = 0; k <= d; ++k) {
    auto xk = mesh.node(ids[static_cast<std::size_t>(k)]);
    for (int r = 0; r < d; ++r) x(r) += n(k) * xk[static_cast<std::size_t>(r)];
  }
  return x;
}

// ---------------------------------------------------------------------------

SpaceTimeMesh classify_boundary(Mesh mesh, double t0, double tN, double tol) {
  SpaceTimeMesh st;
  st.t0 = t0;
  st.tN = tN;
  const int d = mesh.dim();
  const auto& facets = mesh.boundary();
  for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
    const auto& f = facets[static_cast<std::size_t>(i)];
    bool all_bottom = true, all_top = true, any_bottom = false, any_top = false;
    for (int k = 0; k < d; ++k) {
      const double t = mesh.node(f.nodes[static_cast<std::size_t>(k)])[static_cast<std::size_t>(d - 1)];
      const bool b = std::abs(t - t0) <= tol;
      const bool u = std::abs(t - tN) <= tol;
      all_bottom = all_bottom && b;
      all_top = all_top && u;
      any_bottom = any_bottom || b;
      any_top = any_top || u;
    }
    if (all_bottom) {
      st.bottom_facets.push_back(i);
    } else if (all_top) {
      st.top_facets.push_back(i);
    } else {
      if (any_bottom && any_top) {
        // A mantle facet spanning the whole interval must have spatial extent.
        double extent = 0.0;
        auto a = mesh.node(f.nodes[0]);
        for (int k = 1; k < d; ++k) {
          auto b = mesh.node(f.nodes[static_cast<std::size_t>(k)]);
          double s = 0.0;
          for (int c = 0; c < d - 1; ++c)
            s += (a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)]) *
                 (a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)]);
          extent = std::max(extent, std::sqrt(s));
        }
        if (extent == 0.0)
          throw MeshTopologyError("boundary facet " + std::to_string(i) +
                                  " connects t0 and tN with zero spatial extent");
      }
      st.mantle_facets.push_back(i);
    }
  }
  st.mesh = std::move(mesh);
  return st;
}

std::vector<BoundaryFacet> find_boundary_faces(const Mesh& mesh) {
  const auto faces = all_faces(mesh);
  std::vector<BoundaryFacet> out;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i + 1;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i == 1) {
      BoundaryFacet f;
      f.nodes = faces[i].key;
      f.owner = faces[i].element;
      out.push_back(f);
    }
    i = j;
  }
  return out;
}

ValidationReport validate_mesh(const Mesh& mesh) {
  ValidationReport report;
  auto add = [&](std::string msg) {
    if (report.violations.size() < 100) report.violations.push_back(std::move(msg));
  };
  const int d = mesh.dim();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double det = detail::signed_volume_det(mesh.coords().data(), mesh.element(e).data(), d);
    if (!(det > degeneracy_threshold(mesh.max_edge_length(e), d)))
      add("element " + std::to_string(e) + " has non-positive measure");
  }

  const auto faces = all_faces(mesh);
  std::vector<FaceKey> single;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i + 1;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i > 2) {
      std::ostringstream os;
      os << "face shared by " << (j - i) << " elements (first " << faces[i].element << ")";
      add(os.str());
    } else if (j - i == 1) {
      single.push_back(faces[i].key);
    }
    i = j;
  }

  std::vector<FaceKey> listed;
  listed.reserve(mesh.boundary().size());
  for (const auto& f : mesh.boundary()) listed.push_back(sorted_key({f.nodes.data(), static_cast<std::size_t>(d)}));
  std::sort(listed.begin(), listed.end());
  for (std::size_t i = 1; i < listed.size(); ++i)
    if (listed[i] == listed[i - 1]) add("boundary facet listed twice");
  std::vector<FaceKey> missing, extra;
  std::set_difference(single.begin(), single.end(), listed.begin(), listed.end(), std::back_inserter(missing));
  std::set_difference(listed.begin(), listed.end(), single.begin(), single.end(), std::back_inserter(extra));
  if (!missing.empty()) add(std::to_string(missing.size()) + " boundary faces are not listed as boundary facets");
  if (!extra.empty()) add(std::to_string(extra.size()) + " listed boundary facets are not single-owner faces");
  return report;
}

}  // namespace stfem
