#include "stfem/extrude.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "stfem/error.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

NodeTrajectory NodeTrajectory::rotation(double omega, Vec3 center, Vec3 axis) {
  NodeTrajectory t;
  t.kind = Kind::rigid_rotation;
  t.omega = omega;
  t.center = center;
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(n > 0.0)) throw Error("rotation axis must be non-zero");
  t.axis = {axis[0] / n, axis[1] / n, axis[2] / n};
  return t;
}

void rotate_point(const NodeTrajectory& traj, double elapsed, std::span<double> p) {
  if (traj.kind == NodeTrajectory::Kind::fixed || traj.omega == 0.0 || elapsed == 0.0) return;
  const double th = traj.omega * elapsed;
  const double c = std::cos(th), s = std::sin(th);
  if (p.size() == 2) {
    const double x = p[0] - traj.center[0], y = p[1] - traj.center[1];
    p[0] = traj.center[0] + c * x - s * y;
    p[1] = traj.center[1] + s * x + c * y;
    return;
  }
  // Rodrigues' formula about the unit axis through `center`.
  const Vec3& k = traj.axis;
  const double v0 = p[0] - traj.center[0], v1 = p[1] - traj.center[1], v2 = p[2] - traj.center[2];
  const double kv = k[0] * v0 + k[1] * v1 + k[2] * v2;
  const double cx = k[1] * v2 - k[2] * v1, cy = k[2] * v0 - k[0] * v2, cz = k[0] * v1 - k[1] * v0;
  p[0] = traj.center[0] + v0 * c + cx * s + k[0] * kv * (1.0 - c);
  p[1] = traj.center[1] + v1 * c + cy * s + k[1] * kv * (1.0 - c);
  p[2] = traj.center[2] + v2 * c + cz * s + k[2] * kv * (1.0 - c);
}

std::vector<double> rigid_rotation_positions(const Mesh& spatial, const NodeTrajectory& traj, double t0, double t) {
  std::vector<double> pos = spatial.coords();
  const auto d = static_cast<std::size_t>(spatial.dim());
  for (std::size_t i = 0; i < pos.size(); i += d) rotate_point(traj, t - t0, {pos.data() + i, d});
  return pos;
}

namespace {

/// Writes the n+1 simplices of a prism into `out` (n+2 ids each).
void kuhn_split(const int* bottom, const int* top, int n_plus_1, std::vector<int>& out) {
  std::array<int, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + n_plus_1, 0);
  std::sort(order.begin(), order.begin() + n_plus_1, [&](int a, int b) { return bottom[a] < bottom[b]; });
  const int n = n_plus_1 - 1;
  for (int k = 0; k <= n; ++k) {
    for (int i = 0; i <= n - k; ++i) out.push_back(bottom[order[static_cast<std::size_t>(i)]]);
    for (int i = n - k; i <= n; ++i) out.push_back(top[order[static_cast<std::size_t>(i)]]);
  }
}

using PlaceFn = std::function<void(int level, int node, double* out)>;

/// Layered extrusion shared by space-time and z-layer builders. `place`
/// gives node coordinates, `place_flat` an untwisted reference used to detect
/// orientation flips (may be empty to skip the check).
Mesh extrude_generic(const Mesh& spatial, int levels, const PlaceFn& place, const PlaceFn& place_flat,
                     std::string_view bottom_tag, std::string_view top_tag) {
  const int nsd = spatial.dim();
  const int D = nsd + 1;
  const int n = spatial.num_nodes();
  const int nverts = nsd + 1;

  std::vector<double> coords(static_cast<std::size_t>(n) * static_cast<std::size_t>(levels + 1) * static_cast<std::size_t>(D));
  for (int l = 0; l <= levels; ++l)
    for (int i = 0; i < n; ++i) place(l, i, coords.data() + (static_cast<std::size_t>(l) * n + i) * D);

  std::vector<double> flat;
  if (place_flat) {
    flat.resize(coords.size());
    for (int l = 0; l <= levels; ++l)
      for (int i = 0; i < n; ++i) place_flat(l, i, flat.data() + (static_cast<std::size_t>(l) * n + i) * D);
  }

  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(spatial.num_elements()) * levels * nverts * (D + 1));
  std::array<int, kMaxDim> bottom{}, top{};
  for (int l = 0; l < levels; ++l) {
    for (int e = 0; e < spatial.num_elements(); ++e) {
      auto ids = spatial.element(e);
      for (int k = 0; k < nverts; ++k) {
        bottom[static_cast<std::size_t>(k)] = l * n + ids[static_cast<std::size_t>(k)];
        top[static_cast<std::size_t>(k)] = (l + 1) * n + ids[static_cast<std::size_t>(k)];
      }
      const std::size_t first = cells.size();
      kuhn_split(bottom.data(), top.data(), nverts, cells);
      if (!place_flat) continue;
      for (std::size_t s = first; s < cells.size(); s += static_cast<std::size_t>(D + 1)) {
        const double det = detail::signed_volume_det(coords.data(), cells.data() + s, D);
        const double ref = detail::signed_volume_det(flat.data(), cells.data() + s, D);
        if (!(det * ref > 0.0)) {
          const int st_elem = static_cast<int>(s / static_cast<std::size_t>(D + 1));
          throw InvertedElement(st_elem, l,
                                "space-time element " + std::to_string(st_elem) + " (spatial element " +
                                    std::to_string(e) + ") inverts at level " + std::to_string(l) +
                                    "; reduce the twist per level");
        }
      }
    }
  }

  std::vector<std::string> tags = spatial.tag_names();
  const int bottom_id = intern_tag(tags, bottom_tag);
  const int top_id = intern_tag(tags, top_tag);
  std::vector<BoundaryFacet> facets;
  std::vector<int> scratch;
  for (int e = 0; e < spatial.num_elements(); ++e) {
    auto ids = spatial.element(e);
    BoundaryFacet b, t;
    for (int k = 0; k < nverts; ++k) {
      b.nodes[static_cast<std::size_t>(k)] = ids[static_cast<std::size_t>(k)];
      t.nodes[static_cast<std::size_t>(k)] = levels * n + ids[static_cast<std::size_t>(k)];
    }
    b.tag = bottom_id;
    t.tag = top_id;
    facets.push_back(b);
    facets.push_back(t);
  }
  for (const auto& sf : spatial.boundary()) {
    for (int l = 0; l < levels; ++l) {
      for (int k = 0; k < nsd; ++k) {
        bottom[static_cast<std::size_t>(k)] = l * n + sf.nodes[static_cast<std::size_t>(k)];
        top[static_cast<std::size_t>(k)] = (l + 1) * n + sf.nodes[static_cast<std::size_t>(k)];
      }
      scratch.clear();
      kuhn_split(bottom.data(), top.data(), nsd, scratch);
      for (std::size_t s = 0; s < scratch.size(); s += static_cast<std::size_t>(nsd + 1)) {
        BoundaryFacet f;
        for (int k = 0; k <= nsd; ++k) f.nodes[static_cast<std::size_t>(k)] = scratch[s + static_cast<std::size_t>(k)];
        f.tag = sf.tag;
        facets.push_back(f);
      }
    }
  }
  return Mesh(D, std::move(coords), std::move(cells), std::move(facets), std::move(tags));
}

}  // namespace

std::vector<std::vector<int>> decompose_prism(std::span<const int> bottom_ids, std::span<const int> top_ids) {
  if (bottom_ids.size() != top_ids.size() || bottom_ids.size() < 2 || bottom_ids.size() > kMaxDim)
    throw Error("decompose_prism expects matching bottom/top lists of 2..4 nodes");
  std::vector<int> flat;
  const int nv = static_cast<int>(bottom_ids.size());
  kuhn_split(bottom_ids.data(), top_ids.data(), nv, flat);
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < flat.size(); s += static_cast<std::size_t>(nv + 1))
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(s), flat.begin() + static_cast<std::ptrdiff_t>(s + nv + 1));
  return out;
}

SpaceTimeMesh extrude_simplex_st(const Mesh& spatial, const ExtrusionSpec& spec) {
  if (spec.levels < 1) throw Error("extrusion needs at least one level");
  if (!(spec.tN > spec.t0)) throw Error("extrusion needs tN > t0");
  const int nsd = spatial.dim();
  if (nsd < 2 || nsd > 3) throw Error("space-time extrusion supports 2D and 3D spatial meshes");
  const double dt = spec.dt();
  auto level_time = [&](int l) { return l == spec.levels ? spec.tN : spec.t0 + l * dt; };

  const bool moving = spec.trajectory.kind == NodeTrajectory::Kind::rigid_rotation && spec.trajectory.omega != 0.0;
  PlaceFn place = [&](int l, int i, double* out) {
    auto x = spatial.node(i);
    std::copy(x.begin(), x.end(), out);
    const double t = level_time(l);
    rotate_point(spec.trajectory, t - spec.t0, {out, static_cast<std::size_t>(nsd)});
    out[nsd] = t;
  };
  PlaceFn flat = [&](int l, int i, double* out) {
    auto x = spatial.node(i);
    std::copy(x.begin(), x.end(), out);
    out[nsd] = level_time(l);
  };
  Mesh m = extrude_generic(spatial, spec.levels, place, moving ? flat : PlaceFn{}, "bottom", "top");
  const double tol = 1e-12 * (spec.tN - spec.t0);
  return classify_boundary(std::move(m), spec.t0, spec.tN, tol);
}

double max_admissible_twist(const Mesh& spatial, const NodeTrajectory& traj) {
  if (traj.kind == NodeTrajectory::Kind::fixed || traj.omega == 0.0) return std::numeric_limits<double>::infinity();
  auto valid = [&](double dt) {
    ExtrusionSpec spec;
    spec.t0 = 0.0;
    spec.tN = dt;
    spec.levels = 1;
    spec.trajectory = traj;
    try {
      extrude_simplex_st(spatial, spec);
      return true;
    } catch (const InvertedElement&) {
      return false;
    } catch (const DegenerateElement&) {
      return false;
    }
  };
  double hi = std::numbers::pi / std::abs(traj.omega);
  if (valid(hi)) return hi;
  double lo = 0.0;
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (valid(mid) ? lo : hi) = mid;
  }
  return lo;
}

Mesh extrude_layers(const Mesh& spatial2d, double z0, double z1, int layers, std::string_view cap_tag) {
  if (spatial2d.dim() != 2) throw Error("extrude_layers expects a 2D mesh");
  if (layers < 1 || !(z1 > z0)) throw Error("extrude_layers needs layers >= 1 and z1 > z0");
  PlaceFn place = [&](int l, int i, double* out) {
    auto x = spatial2d.node(i);
    out[0] = x[0];
    out[1] = x[1];
    out[2] = l == layers ? z1 : z0 + (z1 - z0) * l / layers;
  };
  return extrude_generic(spatial2d, layers, place, PlaceFn{}, cap_tag, cap_tag);
}

Mesh make_box_mesh(int nx, int ny, double x0, double x1, double y0, double y1) {
  if (nx < 1 || ny < 1) throw Error("box mesh needs nx, ny >= 1");
  std::vector<double> coords;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      coords.push_back(x0 + (x1 - x0) * i / nx);
      coords.push_back(y0 + (y1 - y0) * j / ny);
    }
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  std::vector<int> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      cells.insert(cells.end(), {a, b, c, a, c, d});
    }
  std::vector<std::string> tags{"xmin", "xmax", "ymin", "ymax"};
  std::vector<BoundaryFacet> facets;
  auto edge = [&](int p, int q, int tag) {
    BoundaryFacet f;
    f.nodes[0] = p;
    f.nodes[1] = q;
    f.tag = tag;
    facets.push_back(f);
  };
  for (int j = 0; j < ny; ++j) {
    edge(id(0, j), id(0, j + 1), 0);
    edge(id(nx, j), id(nx, j + 1), 1);
  }
  for (int i = 0; i < nx; ++i) {
    edge(id(i, 0), id(i + 1, 0), 2);
    edge(id(i, ny), id(i + 1, ny), 3);
  }
  return Mesh(2, std::move(coords), std::move(cells), std::move(facets), std::move(tags));
}

Mesh make_annulus_mesh(double r_inner, double r_outer, int n_r, int n_theta) {
  if (!(r_outer > r_inner && r_inner > 0.0) || n_r < 1 || n_theta < 3) throw Error("invalid annulus parameters");
  std::vector<double> coords;
  for (int j = 0; j <= n_r; ++j) {
    const double r = r_inner + (r_outer - r_inner) * j / n_r;
    for (int k = 0; k < n_theta; ++k) {
      const double th = 2.0 * std::numbers::pi * k / n_theta;
      coords.push_back(r * std::cos(th));
      coords.push_back(r * std::sin(th));
    }
  }
  auto id = [&](int j, int k) { return j * n_theta + (k % n_theta); };
  std::vector<int> cells;
  for (int j = 0; j < n_r; ++j)
    for (int k = 0; k < n_theta; ++k) {
      const int a = id(j, k), b = id(j, k + 1), c = id(j + 1, k + 1), d = id(j + 1, k);
      if ((j + k) % 2 == 0)
        cells.insert(cells.end(), {a, b, c, a, c, d});
      else
        cells.insert(cells.end(), {a, b, d, b, c, d});
    }
  std::vector<std::string> tags{"inner", "outer"};
  std::vector<BoundaryFacet> facets;
  for (int k = 0; k < n_theta; ++k) {
    BoundaryFacet in, out;
    in.nodes[0] = id(0, k);
    in.nodes[1] = id(0, k + 1);
    in.tag = 0;
    out.nodes[0] = id(n_r, k);
    out.nodes[1] = id(n_r, k + 1);
    out.tag = 1;
    facets.push_back(in);
    facets.push_back(out);
  }
  return Mesh(2, std::move(coords), std::move(cells), std::move(facets), std::move(tags));
}

Mesh make_disk_mesh(double radius, int rings, Vec3 center) {
  if (!(radius > 0.0) || rings < 1) throw Error("invalid disk parameters");
  std::vector<double> coords{center[0], center[1]};
  std::vector<int> ring_start{0};
  for (int j = 1; j <= rings; ++j) {
    ring_start.push_back(static_cast<int>(coords.size() / 2));
    const int m = 6 * j;
    const double r = radius * j / rings;
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      coords.push_back(center[0] + r * std::cos(th));
      coords.push_back(center[1] + r * std::sin(th));
    }
  }
  std::vector<int> cells;
  for (int k = 0; k < 6; ++k) cells.insert(cells.end(), {0, 1 + k, 1 + (k + 1) % 6});
  for (int j = 2; j <= rings; ++j) {
    const int mi = 6 * (j - 1), mo = 6 * j;
    const int si = ring_start[static_cast<std::size_t>(j - 1)], so = ring_start[static_cast<std::size_t>(j)];
    // Zipper between rings: advance whichever ring has the smaller next angle.
    int a = 0, b = 0;
    while (a < mi || b < mo) {
      const double next_in = (a + 1.0) / mi, next_out = (b + 1.0) / mo;
      if (b < mo && (a >= mi || next_out <= next_in)) {
        cells.insert(cells.end(), {si + a % mi, so + b, so + (b + 1) % mo});
        ++b;
      } else {
        cells.insert(cells.end(), {si + a % mi, so + b % mo, si + (a + 1) % mi});
        ++a;
      }
    }
  }
  std::vector<std::string> tags{"wall"};
  std::vector<BoundaryFacet> facets;
  const int so = ring_start.back(), mo = 6 * rings;
  for (int k = 0; k < mo; ++k) {
    BoundaryFacet f;
    f.nodes[0] = so + k;
    f.nodes[1] = so + (k + 1) % mo;
    f.tag = 0;
    facets.push_back(f);
  }
  return Mesh(2, std::move(coords), std::move(cells), std::move(facets), std::move(tags));
}

}  // namespace stfem
