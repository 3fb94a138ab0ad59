#include "stfem/postproc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "stfem/error.hpp"
#include "stfem/quadrature.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

namespace {

struct CutVertex {
  int key = 0;
  std::array<double, 3> x{};
  std::vector<double> f;
};

double cell_det(int nsd, const double* p0, const double* p1, const double* p2, const double* p3) {
  if (nsd == 2) return (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
  const double a[3] = {p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
  const double b[3] = {p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]};
  const double c[3] = {p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]};
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
}

std::array<double, 3> sub(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Orders coplanar points (indices into `v`) by angle around their centroid
/// in the plane with normal `n` (2D: n = z), starting from the lowest key.
std::vector<int> order_polygon(const std::vector<CutVertex>& v, std::vector<int> idx, std::array<double, 3> n) {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (int i : idx)
    for (int k = 0; k < 3; ++k) c[k] += v[i].x[k] / static_cast<double>(idx.size());
  std::array<double, 3> u{0.0, 0.0, 0.0};
  for (int i : idx) {
    const auto d = sub(v[i].x, c);
    if (dot3(d, d) > dot3(u, u)) u = d;
  }
  const auto w = cross(n, u);
  std::vector<std::pair<double, int>> ang;
  for (int i : idx) {
    const auto d = sub(v[i].x, c);
    ang.emplace_back(std::atan2(dot3(d, w), dot3(d, u)), i);
  }
  std::sort(ang.begin(), ang.end());
  std::vector<int> out;
  for (auto& [a, i] : ang) out.push_back(i);
  const auto lowest = std::min_element(out.begin(), out.end(), [&](int a, int b) { return v[a].key < v[b].key; });
  std::rotate(out.begin(), lowest, out.end());
  return out;
}

}  // namespace

double SliceResult::cell_measure(int c) const {
  const int* ids = cells.data() + static_cast<std::size_t>(c) * (nsd + 1);
  const double* p[4] = {nullptr, nullptr, nullptr, nullptr};
  for (int k = 0; k <= nsd; ++k) p[k] = coords.data() + static_cast<std::size_t>(ids[k]) * nsd;
  return std::abs(cell_det(nsd, p[0], p[1], p[2], nsd == 3 ? p[3] : p[0])) / detail::factorial(nsd);
}

double SliceResult::measure() const {
  double s = 0.0;
  for (int c = 0; c < num_cells(); ++c) s += cell_measure(c);
  return s;
}

SliceResult slice_at_time(const Mesh& st, std::span<const double> field, int components, double t) {
  const int dim = st.dim();
  const int nsd = dim - 1;
  if (nsd < 2 || nsd > 3) throw Error("slicing needs a 3D or 4D space-time mesh");
  if (static_cast<int>(field.size()) != st.num_nodes() * components)
    throw IndexOutOfRange("field size does not match the mesh");
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  for (int i = 0; i < st.num_nodes(); ++i) {
    tmin = std::min(tmin, st.node(i)[nsd]);
    tmax = std::max(tmax, st.node(i)[nsd]);
  }
  const double eps = 1e-12 * std::max(tmax - tmin, std::numeric_limits<double>::min());
  if (st.num_nodes() == 0 || t < tmin - eps || t > tmax + eps)
    throw EmptySlice("slice time " + std::to_string(t) + " outside [" + std::to_string(tmin) + ", " +
                     std::to_string(tmax) + "]");
  const bool at_bottom = std::abs(t - tmin) <= eps;

  SliceResult out;
  out.nsd = nsd;
  out.time = t;
  out.components = components;
  std::vector<CutVertex> verts;
  for (int e = 0; e < st.num_elements(); ++e) {
    auto ids = st.element(e);
    int cls[kMaxDim + 1];
    int nb = 0, na = 0, non = 0, off = -1;
    for (int a = 0; a <= dim; ++a) {
      const double dt = st.node(ids[a])[nsd] - t;
      cls[a] = std::abs(dt) <= eps ? 0 : (dt < 0 ? -1 : 1);
      nb += cls[a] < 0;
      na += cls[a] > 0;
      non += cls[a] == 0;
      if (cls[a] != 0) off = a;
    }
    if (nb + non == dim + 1 && non < dim) continue;  // entirely below
    if (na + non == dim + 1 && non < dim) continue;  // entirely above
    if (non == dim) {
      // A whole facet lies in the plane.
      const bool own = cls[off] < 0 || at_bottom;
      if (!own) continue;
    }
    verts.clear();
    for (int a = 0; a <= dim; ++a) {
      if (cls[a] != 0) continue;
      CutVertex v;
      v.key = a;
      auto p = st.node(ids[a]);
      for (int k = 0; k < nsd; ++k) v.x[k] = p[k];
      v.f.assign(field.begin() + static_cast<std::ptrdiff_t>(ids[a]) * components,
                 field.begin() + static_cast<std::ptrdiff_t>(ids[a] + 1) * components);
      verts.push_back(std::move(v));
    }
    int edge = 0;
    for (int a = 0; a <= dim; ++a) {
      for (int b = a + 1; b <= dim; ++b, ++edge) {
        if (cls[a] * cls[b] != -1) continue;
        auto pa = st.node(ids[a]);
        auto pb = st.node(ids[b]);
        const double lam = (t - pa[nsd]) / (pb[nsd] - pa[nsd]);
        CutVertex v;
        v.key = dim + 1 + edge;
        for (int k = 0; k < nsd; ++k) v.x[k] = (1.0 - lam) * pa[k] + lam * pb[k];
        v.f.resize(components);
        for (int c = 0; c < components; ++c)
          v.f[c] = (1.0 - lam) * field[static_cast<std::size_t>(ids[a]) * components + c] +
                   lam * field[static_cast<std::size_t>(ids[b]) * components + c];
        verts.push_back(std::move(v));
      }
    }
    const int nv = static_cast<int>(verts.size());
    if (nv < nsd + 1) continue;

    double h = 0.0;
    for (int i = 0; i < nv; ++i)
      for (int j = i + 1; j < nv; ++j) h = std::max(h, std::sqrt(dot3(sub(verts[i].x, verts[j].x), sub(verts[i].x, verts[j].x))));
    const double vol_tol = 1e-14 * std::pow(h, nsd);

    std::vector<std::array<int, 4>> simplices;
    if (nsd == 2) {
      std::vector<int> idx(nv);
      std::iota(idx.begin(), idx.end(), 0);
      const auto ring = order_polygon(verts, idx, {0.0, 0.0, 1.0});
      for (int i = 1; i + 1 < nv; ++i) simplices.push_back({ring[0], ring[i], ring[i + 1], -1});
    } else {
      // Faces of the polytope are the cuts of the simplex facets.
      std::vector<std::vector<int>> faces;
      for (int m = 0; m <= dim; ++m) {
        std::vector<int> face;
        int ed = 0;
        std::vector<int> edge_a, edge_b;
        for (int a = 0; a <= dim; ++a)
          for (int b = a + 1; b <= dim; ++b, ++ed) {
            edge_a.push_back(a);
            edge_b.push_back(b);
          }
        for (int i = 0; i < nv; ++i) {
          const int key = verts[i].key;
          const bool uses_m = key <= dim ? key == m : (edge_a[key - dim - 1] == m || edge_b[key - dim - 1] == m);
          if (!uses_m) face.push_back(i);
        }
        if (face.size() < 3) continue;
        std::sort(face.begin(), face.end());
        if (std::find(faces.begin(), faces.end(), face) == faces.end()) faces.push_back(face);
      }
      int apex = 0;
      for (int i = 1; i < nv; ++i)
        if (verts[i].key < verts[apex].key) apex = i;
      for (const auto& face : faces) {
        if (std::find(face.begin(), face.end(), apex) != face.end()) continue;
        std::array<double, 3> n{0.0, 0.0, 0.0};
        for (std::size_t i = 1; i < face.size(); ++i)
          for (std::size_t j = i + 1; j < face.size(); ++j) {
            const auto c = cross(sub(verts[face[i]].x, verts[face[0]].x), sub(verts[face[j]].x, verts[face[0]].x));
            if (dot3(c, c) > dot3(n, n)) n = c;
          }
        if (dot3(n, n) == 0.0) continue;
        const auto ring = order_polygon(verts, face, n);
        for (std::size_t i = 1; i + 1 < ring.size(); ++i) simplices.push_back({apex, ring[0], ring[i], ring[i + 1]});
      }
    }

    const int base = out.num_vertices();
    bool any = false;
    for (auto s : simplices) {
      const double* p[4];
      for (int k = 0; k <= nsd; ++k) p[k] = verts[s[k]].x.data();
      const double det = cell_det(nsd, p[0], p[1], p[2], nsd == 3 ? p[3] : p[0]);
      if (std::abs(det) <= vol_tol) continue;
      if (det < 0) std::swap(s[0], s[1]);
      for (int k = 0; k <= nsd; ++k) out.cells.push_back(base + s[k]);
      any = true;
    }
    if (!any) continue;
    for (const auto& v : verts) {
      for (int k = 0; k < nsd; ++k) out.coords.push_back(v.x[k]);
      out.field.insert(out.field.end(), v.f.begin(), v.f.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

PointLocator::PointLocator(const Mesh& st) : mesh_(&st) {
  const int dim = st.dim();
  const int ne = st.num_elements();
  std::array<double, kMaxDim> hi{};
  for (int d = 0; d < dim; ++d) {
    lo_[d] = std::numeric_limits<double>::infinity();
    hi[d] = -lo_[d];
  }
  for (int i = 0; i < st.num_nodes(); ++i)
    for (int d = 0; d < dim; ++d) {
      lo_[d] = std::min(lo_[d], st.node(i)[d]);
      hi[d] = std::max(hi[d], st.node(i)[d]);
    }
  // about two elements per bucket
  const int per_axis = std::max(1, static_cast<int>(std::ceil(std::pow(std::max(ne, 1) / 2.0, 1.0 / dim))));
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) {
    const double ext = hi[d] - lo_[d];
    cells_[d] = ext > 0.0 ? per_axis : 1;
    inv_h_[d] = ext > 0.0 ? cells_[d] / ext : 0.0;
    total *= static_cast<std::size_t>(cells_[d]);
  }
  t_min_ = ne ? lo_[dim - 1] : 0.0;
  tol_time_ = 1e-12 * std::max(hi[dim - 1] - t_min_, std::numeric_limits<double>::min());

  // Bucket every element by its bounding box, padded by a relative tolerance.
  t_max_.assign(static_cast<std::size_t>(ne), 0.0);
  std::vector<std::array<int, 2 * kMaxDim>> range(static_cast<std::size_t>(ne));
  bucket_start_.assign(total + 1, 0);
  for (int e = 0; e < ne; ++e) {
    std::array<double, kMaxDim> bl{}, bh{};
    for (int d = 0; d < dim; ++d) {
      bl[d] = std::numeric_limits<double>::infinity();
      bh[d] = -bl[d];
    }
    for (int id : st.element(e))
      for (int d = 0; d < dim; ++d) {
        bl[d] = std::min(bl[d], st.node(id)[d]);
        bh[d] = std::max(bh[d], st.node(id)[d]);
      }
    t_max_[static_cast<std::size_t>(e)] = bh[dim - 1];
    auto& r = range[static_cast<std::size_t>(e)];
    for (int d = 0; d < dim; ++d) {
      const double pad = 1e-9 * (bh[d] - bl[d]) + 1e-12 * (hi[d] - lo_[d]);
      r[2 * d] = std::clamp(static_cast<int>(std::floor((bl[d] - pad - lo_[d]) * inv_h_[d])), 0, cells_[d] - 1);
      r[2 * d + 1] = std::clamp(static_cast<int>(std::floor((bh[d] + pad - lo_[d]) * inv_h_[d])), 0, cells_[d] - 1);
    }
  }
  // Two passes over the covered buckets: count, then fill in element order.
  const auto visit = [&](int e, auto&& fn) {
    const auto& r = range[static_cast<std::size_t>(e)];
    std::array<int, kMaxDim> c{};
    for (int d = 0; d < dim; ++d) c[d] = r[2 * d];
    while (true) {
      std::size_t flat = 0;
      for (int d = dim - 1; d >= 0; --d) flat = flat * static_cast<std::size_t>(cells_[d]) + static_cast<std::size_t>(c[d]);
      fn(flat);
      int d = 0;
      while (d < dim && ++c[d] > r[2 * d + 1]) {
        c[d] = r[2 * d];
        ++d;
      }
      if (d == dim) break;
    }
  };
  for (int e = 0; e < ne; ++e) visit(e, [&](std::size_t b) { ++bucket_start_[b + 1]; });
  for (std::size_t b = 0; b < total; ++b) bucket_start_[b + 1] += bucket_start_[b];
  bucket_elems_.resize(static_cast<std::size_t>(bucket_start_[total]));
  std::vector<int> fill(bucket_start_.begin(), bucket_start_.end() - 1);
  for (int e = 0; e < ne; ++e) visit(e, [&](std::size_t b) { bucket_elems_[static_cast<std::size_t>(fill[b]++)] = e; });
}

int PointLocator::cell_of(std::span<const double> point) const {
  const int dim = mesh_->dim();
  std::size_t flat = 0;
  for (int d = dim - 1; d >= 0; --d) {
    const double x = (point[d] - lo_[d]) * inv_h_[d];
    const double tol = 1e-9;
    if (x < -tol || x > cells_[d] + tol) return -1;
    const int c = std::clamp(static_cast<int>(std::floor(x)), 0, cells_[d] - 1);
    flat = flat * static_cast<std::size_t>(cells_[d]) + static_cast<std::size_t>(c);
  }
  return static_cast<int>(flat);
}

bool PointLocator::barycentric(int e, std::span<const double> point, std::array<double, kMaxDim + 1>& bary) const {
  const int dim = mesh_->dim();
  auto ids = mesh_->element(e);
  Eigen::MatrixXd j(dim, dim);
  Eigen::VectorXd rhs(dim);
  auto x0 = mesh_->node(ids[0]);
  for (int k = 0; k < dim; ++k) {
    auto xk = mesh_->node(ids[k + 1]);
    for (int m = 0; m < dim; ++m) j(m, k) = xk[m] - x0[m];
    rhs(k) = point[k] - x0[k];
  }
  const Eigen::VectorXd xi = j.partialPivLu().solve(rhs);
  bary[0] = 1.0 - xi.sum();
  for (int k = 0; k < dim; ++k) bary[k + 1] = xi(k);
  return std::all_of(bary.begin(), bary.begin() + dim + 1, [](double b) { return b >= -1e-10; });
}

std::optional<PointLocator::Hit> PointLocator::locate_brute_force(std::span<const double> point) const {
  Hit h;
  for (int e = 0; e < mesh_->num_elements(); ++e) {
    if (barycentric(e, point, h.bary)) {
      h.element = e;
      return h;
    }
  }
  return std::nullopt;
}

std::optional<PointLocator::Hit> PointLocator::locate(std::span<const double> point) const {
  const int dim = mesh_->dim();
  if (mesh_->num_elements() == 0) return std::nullopt;
  if (static_cast<int>(point.size()) != dim) throw IndexOutOfRange("probe point has wrong dimension");
  const int b = cell_of(point);
  if (b < 0) return std::nullopt;
  const double t = point[dim - 1];
  const bool on_level_above_start = std::abs(t - t_min_) > tol_time_;
  std::optional<Hit> first;
  Hit h;
  for (int k = bucket_start_[b]; k < bucket_start_[b + 1]; ++k) {
    const int e = bucket_elems_[static_cast<std::size_t>(k)];
    if (!barycentric(e, point, h.bary)) continue;
    h.element = e;
    // A point on a time level is owned by an element ending at that level.
    if (on_level_above_start && std::abs(t_max_[static_cast<std::size_t>(e)] - t) <= tol_time_) return h;
    if (!first) first = h;
  }
  return first;
}

std::vector<std::optional<std::vector<double>>> probe(const Mesh& st, std::span<const double> field, int components,
                                                      std::span<const double> points) {
  if (static_cast<int>(field.size()) != st.num_nodes() * components)
    throw IndexOutOfRange("field size does not match the mesh");
  const PointLocator loc(st);
  const int dim = st.dim();
  std::vector<std::optional<std::vector<double>>> out;
  for (std::size_t p = 0; p + dim <= points.size(); p += dim) {
    const auto hit = loc.locate(points.subspan(p, dim));
    if (!hit) {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::vector<double> v(components, 0.0);
    auto ids = st.element(hit->element);
    for (int a = 0; a <= dim; ++a)
      for (int c = 0; c < components; ++c) v[c] += hit->bary[a] * field[static_cast<std::size_t>(ids[a]) * components + c];
    out.emplace_back(std::move(v));
  }
  return out;
}

std::optional<Vec3> vorticity(const PointLocator& locator, std::span<const double> field, int components,
                              std::span<const double> point) {
  const auto hit = locator.locate(point);
  if (!hit) return std::nullopt;
  const Mesh& m = locator.mesh();
  const int nsd = m.dim() - 1;
  const Eigen::MatrixXd g = basis_gradients(m, hit->element);
  auto ids = m.element(hit->element);
  double du[3][3] = {};  // du_i / dx_j
  for (int a = 0; a <= m.dim(); ++a)
    for (int i = 0; i < nsd; ++i)
      for (int j = 0; j < nsd; ++j) du[i][j] += g(a, j) * field[static_cast<std::size_t>(ids[a]) * components + i];
  if (nsd == 2) return Vec3{0.0, 0.0, du[1][0] - du[0][1]};
  return Vec3{du[2][1] - du[1][2], du[0][2] - du[2][0], du[1][0] - du[0][1]};
}

L2Error l2_error(const SliceResult& slice, const ExactSolution& exact, int mean_free_component) {
  const int nsd = slice.nsd;
  const int nc = slice.components;
  const QuadratureRule q = simplex_quadrature(nsd, 2);
  L2Error out;
  out.error.assign(nc, 0.0);
  out.norm.assign(nc, 0.0);

  auto visit = [&](auto&& fn) {
    for (int c = 0; c < slice.num_cells(); ++c) {
      const int* ids = slice.cells.data() + static_cast<std::size_t>(c) * (nsd + 1);
      const double meas = slice.cell_measure(c) * detail::factorial(nsd);
      for (int k = 0; k < q.size(); ++k) {
        const Eigen::VectorXd n = basis_eval(q.point(k));
        Vec3 x{0.0, 0.0, 0.0};
        std::vector<double> uh(nc, 0.0);
        for (int a = 0; a <= nsd; ++a) {
          for (int d = 0; d < nsd; ++d) x[d] += n(a) * slice.coords[static_cast<std::size_t>(ids[a]) * nsd + d];
          for (int m = 0; m < nc; ++m) uh[m] += n(a) * slice.field[static_cast<std::size_t>(ids[a]) * nc + m];
        }
        fn(q.weights[k] * meas, uh, exact(x, slice.time));
      }
    }
  };

  double shift = 0.0;
  if (mean_free_component >= 0 && mean_free_component < nc) {
    double diff = 0.0, area = 0.0;
    visit([&](double w, const std::vector<double>& uh, const std::array<double, 4>& ex) {
      diff += w * (uh[mean_free_component] - ex[mean_free_component]);
      area += w;
    });
    if (area > 0.0) shift = diff / area;
  }
  visit([&](double w, const std::vector<double>& uh, const std::array<double, 4>& ex) {
    for (int m = 0; m < nc && m < 4; ++m) {
      const double d = uh[m] - ex[m] - (m == mean_free_component ? shift : 0.0);
      out.error[m] += w * d * d;
      out.norm[m] += w * ex[m] * ex[m];
    }
  });
  for (int m = 0; m < nc; ++m) {
    out.total_error += out.error[m];
    out.total_norm += out.norm[m];
    out.error[m] = std::sqrt(out.error[m]);
    out.norm[m] = std::sqrt(out.norm[m]);
  }
  out.total_error = std::sqrt(out.total_error);
  out.total_norm = std::sqrt(out.total_norm);
  return out;
}

void write_vtk(std::ostream& os, int nsd, std::span<const double> coords, std::span<const int> cells,
               std::span<const double> field, int components) {
  const std::size_t nv = coords.size() / nsd;
  const std::size_t nc = cells.size() / (nsd + 1);
  os << std::setprecision(9);
  os << "# vtk DataFile Version 3.0\nstfem\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (std::size_t i = 0; i < nv; ++i) {
    for (int k = 0; k < 3; ++k) os << (k ? " " : "") << (k < nsd ? coords[i * nsd + k] : 0.0);
    os << '\n';
  }
  os << "CELLS " << nc << ' ' << nc * (nsd + 2) << '\n';
  for (std::size_t c = 0; c < nc; ++c) {
    os << nsd + 1;
    for (int k = 0; k <= nsd; ++k) os << ' ' << cells[c * (nsd + 1) + k];
    os << '\n';
  }
  os << "CELL_TYPES " << nc << '\n';
  for (std::size_t c = 0; c < nc; ++c) os << (nsd == 2 ? 5 : 10) << '\n';
  if (components < nsd + 1 || field.size() != nv * components) return;
  os << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  for (std::size_t i = 0; i < nv; ++i) {
    for (int k = 0; k < 3; ++k) os << (k ? " " : "") << (k < nsd ? field[i * components + k] : 0.0);
    os << '\n';
  }
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < nv; ++i) os << field[i * components + nsd] << '\n';
}

void export_vtk(const SliceResult& slice, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoFailure("cannot open " + path);
  write_vtk(os, slice.nsd, slice.coords, slice.cells, slice.field, slice.components);
  if (!os) throw IoFailure("failed writing " + path);
}

void export_vtk(const Mesh& spatial, std::span<const double> field, int components, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoFailure("cannot open " + path);
  write_vtk(os, spatial.dim(), spatial.coords(), spatial.cells(), field, components);
  if (!os) throw IoFailure("failed writing " + path);
}

void write_probe_csv(std::ostream& os, int nsd, std::span<const double> points,
                     const std::vector<std::optional<std::vector<double>>>& values) {
  os << (nsd == 2 ? "x,y,t,u1,u2,p\n" : "x,y,z,t,u1,u2,u3,p\n");
  // shortest round-trip form
  const auto put = [&os](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
  };
  const int dim = nsd + 1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (int k = 0; k < dim; ++k) {
      put(points[i * dim + k]);
      os << ',';
    }
    for (int c = 0; c <= nsd; ++c) {
      if (c) os << ',';
      if (values[i]) put((*values[i])[c]);
      else os << "nan";
    }
    os << '\n';
  }
}

}  // namespace stfem
