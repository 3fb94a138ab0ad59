#include "stfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stfem/error.hpp"
#include "stfem/quadrature.hpp"
#include "stfem/stabilization.hpp"
#include "simplex_kernels.hpp"

namespace stfem {

VectorField rigid_body_velocity(double omega, Vec3 center, Vec3 axis) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (n == 0.0) throw ConfigurationError("rotation axis must be nonzero");
  const Vec3 w{omega * axis[0] / n, omega * axis[1] / n, omega * axis[2] / n};
  return [w, center](const Vec3& x, double) {
    const Vec3 r{x[0] - center[0], x[1] - center[1], x[2] - center[2]};
    return Vec3{w[1] * r[2] - w[2] * r[1], w[2] * r[0] - w[0] * r[2], w[0] * r[1] - w[1] * r[0]};
  };
}

VectorField constant_field(Vec3 value) {
  return [value](const Vec3&, double) { return value; };
}

namespace {

Vec3 spatial_point(std::span<const double> node, int nsd) {
  Vec3 x{0.0, 0.0, 0.0};
  for (int i = 0; i < nsd; ++i) x[i] = node[i];
  return x;
}

std::vector<int> tags_in_mesh(const Discretization& disc, const std::vector<BoundaryCondition>& list,
                              const char* kind) {
  std::vector<int> ids;
  for (const auto& bc : list) {
    const int id = disc.tag_id(bc.tag);
    if (id < 0) throw ConfigurationError(std::string(kind) + " tag '" + bc.tag + "' does not exist in the mesh");
    if (!bc.value) throw ConfigurationError(std::string(kind) + " tag '" + bc.tag + "' has no function");
    ids.push_back(id);
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Element kernels

struct KernelInput {
  double rho;
  double mu;
  double conv;
  const VectorField* force;
};

template <int NSD, bool Prism>
struct Kernel {
  static constexpr int D = NSD + 1;
  static constexpr int NV = NSD + 1;
  static constexpr int NEN = Prism ? 2 * NV : D + 1;
  static constexpr int B = NSD + 1;
  static constexpr int NDOF = NEN * B;
  using MatD = Eigen::Matrix<double, D, D>;
  using MatX = Eigen::Matrix<double, NEN, D>;

  struct Rule {
    std::vector<double> w;
    std::vector<Eigen::Matrix<double, NEN, 1>> n;
    std::vector<MatX> ref_grad;
  };

  static const Rule& rule() {
    static const Rule r = [] {
      Rule out;
      if constexpr (Prism) {
        const QuadratureRule q = prism_quadrature(NSD, 2);
        for (int k = 0; k < q.size(); ++k) {
          auto p = q.point(k);
          const PrismShape s = prism_shape_functions(p.first(NSD), p[NSD]);
          out.w.push_back(q.weights[k]);
          out.n.push_back(s.values);
          out.ref_grad.push_back(s.ref_gradients);
        }
      } else {
        const QuadratureRule q = simplex_quadrature(D, 2);
        MatX g = MatX::Zero();
        g.row(0).setConstant(-1.0);
        for (int k = 0; k < D; ++k) g(k + 1, k) = 1.0;
        for (int k = 0; k < q.size(); ++k) {
          out.w.push_back(q.weights[k]);
          out.n.push_back(basis_eval(q.point(k)));
          out.ref_grad.push_back(g);
        }
      }
      return out;
    }();
    return r;
  }

  static const MatD& reference_metric() {
    static const MatD g = [] {
      MatD m = MatD::Zero();
      if constexpr (Prism) {
        m.template topLeftCorner<NSD, NSD>() = regular_simplex_gram(NSD);
        m(NSD, NSD) = 1.0;
      } else {
        m = regular_simplex_gram(D);
      }
      return m;
    }();
    return g;
  }

  static MatX coords(const Discretization& d, int e) {
    MatX x;
    auto ids = d.element(e);
    for (int a = 0; a < NEN; ++a) {
      auto p = d.node(ids[a]);
      for (int k = 0; k < D; ++k) x(a, k) = p[k];
    }
    return x;
  }

  static MatD inverse_checked(const MatD& j, const MatX& x, int e, double* det_out) {
    const double det = j.determinant();
    double h = 0.0;
    for (int a = 0; a < NEN; ++a)
      for (int b = a + 1; b < NEN; ++b) h = std::max(h, (x.row(a) - x.row(b)).norm());
    if (!(std::abs(det) > degeneracy_threshold(h, D)))
      throw DegenerateElement(e, "degenerate space-time element " + std::to_string(e));
    if (det_out) *det_out = det;
    return j.inverse();
  }

  static MatD metric(const Discretization& d, int e) {
    const MatX x = coords(d, e);
    MatD jc;
    if constexpr (Prism) {
      std::array<double, NSD> xi;
      xi.fill(1.0 / NV);
      const PrismShape s = prism_shape_functions(xi, 0.5);
      const MatX g = s.ref_gradients;
      jc = x.transpose() * g;
    } else {
      for (int k = 0; k < D; ++k) jc.col(k) = (x.row(k + 1) - x.row(0)).transpose();
    }
    const MatD ji = inverse_checked(jc, x, e, nullptr);
    return ji.transpose() * reference_metric() * ji;
  }

  /// Adds the element residual (and Jacobian when ke != nullptr, row-major
  /// NDOF x NDOF) for nodal unknowns xe.
  static void integrate(const Discretization& d, int e, const double* xe, const KernelInput& in, double tau_m,
                        double tau_c, double* re, double* ke) {
    const Rule& r = rule();
    const MatX x = coords(d, e);
    const double rho = in.rho;
    const double mu = in.mu;
    const double conv = in.conv;

    MatD jinv_const;
    double det_const = 0.0;
    if constexpr (!Prism) {
      MatD j;
      for (int k = 0; k < D; ++k) j.col(k) = (x.row(k + 1) - x.row(0)).transpose();
      jinv_const = inverse_checked(j, x, e, &det_const);
    }

    for (std::size_t q = 0; q < r.w.size(); ++q) {
      const auto& n = r.n[q];
      MatX dn;
      double wdet;
      if constexpr (Prism) {
        const MatD j = x.transpose() * r.ref_grad[q];
        double det = 0.0;
        const MatD ji = inverse_checked(j, x, e, &det);
        dn = r.ref_grad[q] * ji;
        wdet = r.w[q] * std::abs(det);
      } else {
        dn = r.ref_grad[q] * jinv_const;
        wdet = r.w[q] * std::abs(det_const);
      }

      // Field values at the point.
      double u[NSD] = {};
      double gu[NSD][D] = {};  // d u_i / d x_j, j = NSD is time
      double p = 0.0;
      double gp[NSD] = {};
      for (int a = 0; a < NEN; ++a) {
        const double* xa = xe + a * B;
        for (int i = 0; i < NSD; ++i) {
          u[i] += n(a) * xa[i];
          for (int j = 0; j < D; ++j) gu[i][j] += dn(a, j) * xa[i];
        }
        p += n(a) * xa[NSD];
        for (int i = 0; i < NSD; ++i) gp[i] += dn(a, i) * xa[NSD];
      }
      double f[NSD] = {};
      if (in.force && *in.force) {
        Vec3 xq{0.0, 0.0, 0.0};
        double tq = 0.0;
        for (int a = 0; a < NEN; ++a) {
          for (int i = 0; i < NSD; ++i) xq[i] += n(a) * x(a, i);
          tq += n(a) * x(a, NSD);
        }
        const Vec3 fv = (*in.force)(xq, tq);
        for (int i = 0; i < NSD; ++i) f[i] = fv[i];
      }

      double div = 0.0;
      for (int i = 0; i < NSD; ++i) div += gu[i][i];
      double ugu[NSD];  // (u . grad) u
      double rm[NSD];   // strong momentum residual
      for (int i = 0; i < NSD; ++i) {
        ugu[i] = 0.0;
        for (int j = 0; j < NSD; ++j) ugu[i] += u[j] * gu[i][j];
        rm[i] = rho * (gu[i][NSD] + conv * ugu[i] - f[i]) + gp[i];
      }
      double adv[NEN];
      for (int a = 0; a < NEN; ++a) {
        adv[a] = dn(a, NSD);
        for (int j = 0; j < NSD; ++j) adv[a] += conv * u[j] * dn(a, j);
      }

      for (int a = 0; a < NEN; ++a) {
        double* ra = re + a * B;
        for (int i = 0; i < NSD; ++i) {
          double s = n(a) * rho * (gu[i][NSD] + conv * ugu[i] - f[i]);
          for (int j = 0; j < NSD; ++j) s += dn(a, j) * ((i == j ? -p : 0.0) + mu * (gu[i][j] + gu[j][i]));
          s += tau_m * adv[a] * rm[i];
          s += tau_c * rho * dn(a, i) * div;
          ra[i] += wdet * s;
        }
        double s = n(a) * div;
        for (int i = 0; i < NSD; ++i) s += (tau_m / rho) * dn(a, i) * rm[i];
        ra[NSD] += wdet * s;
      }

      if (!ke) continue;
      for (int a = 0; a < NEN; ++a) {
        double gna_gu[NSD];  // sum_i dN(a,i) du_i/dx_k
        for (int k = 0; k < NSD; ++k) {
          gna_gu[k] = 0.0;
          for (int i = 0; i < NSD; ++i) gna_gu[k] += dn(a, i) * gu[i][k];
        }
        for (int b = 0; b < NEN; ++b) {
          double gagb = 0.0;
          for (int j = 0; j < NSD; ++j) gagb += dn(a, j) * dn(b, j);
          for (int i = 0; i < NSD; ++i) {
            double* row = ke + (a * B + i) * NDOF + b * B;
            for (int k = 0; k < NSD; ++k) {
              const double drm = rho * ((i == k ? adv[b] : 0.0) + conv * n(b) * gu[i][k]);
              double s = n(a) * drm;
              s += mu * ((i == k ? gagb : 0.0) + dn(a, k) * dn(b, i));
              s += tau_m * (conv * n(b) * dn(a, k) * rm[i] + adv[a] * drm);
              s += tau_c * rho * dn(a, i) * dn(b, k);
              row[k] += wdet * s;
            }
            row[NSD] += wdet * (-dn(a, i) * n(b) + tau_m * adv[a] * dn(b, i));
          }
          double* row = ke + (a * B + NSD) * NDOF + b * B;
          for (int k = 0; k < NSD; ++k)
            row[k] += wdet * (n(a) * dn(b, k) + tau_m * (dn(a, k) * adv[b] + conv * n(b) * gna_gu[k]));
          row[NSD] += wdet * (tau_m / rho) * gagb;
        }
      }
    }
  }
};

template <typename F>
decltype(auto) dispatch(const Discretization& d, F&& f) {
  const bool prism = d.family == ElementFamily::prism;
  if (d.nsd == 2) return prism ? f(Kernel<2, true>{}) : f(Kernel<2, false>{});
  if (d.nsd == 3) return prism ? f(Kernel<3, true>{}) : f(Kernel<3, false>{});
  throw Error("unsupported spatial dimension");
}

void gather(const Discretization& d, int e, std::span<const double> x, int block, double* out) {
  auto ids = d.element(e);
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (int c = 0; c < block; ++c) out[a * block + c] = x[static_cast<std::size_t>(ids[a]) * block + c];
}

void check_finite(const double* v, int n, int e) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) throw NonFiniteResidual("non-finite residual in element " + std::to_string(e));
}

// Symmetric matrix square root determinant helper for facet measures.
double gram_root(const Eigen::MatrixXd& e) { return std::sqrt(std::max(0.0, (e.transpose() * e).determinant())); }

}  // namespace

// ---------------------------------------------------------------------------

DirichletData dirichlet_values(const Discretization& disc, const BCSpec& bcs) {
  const auto dir_ids = tags_in_mesh(disc, bcs.dirichlet, "Dirichlet");
  const int nsd = disc.nsd;
  std::map<int, std::size_t> choice;  // node -> index into bcs.dirichlet
  for (const auto& mf : disc.mantle) {
    const auto it = std::find(dir_ids.begin(), dir_ids.end(), mf.tag);
    if (it == dir_ids.end()) continue;
    const auto rank = static_cast<std::size_t>(it - dir_ids.begin());
    for (int k = 0; k < mf.count; ++k) {
      auto [pos, inserted] = choice.emplace(mf.nodes[k], rank);
      if (!inserted) pos->second = std::min(pos->second, rank);
    }
  }
  DirichletData out;
  out.nodes.reserve(choice.size());
  out.values.reserve(choice.size() * nsd);
  for (const auto& [node, rank] : choice) {
    auto p = disc.node(node);
    const Vec3 v = bcs.dirichlet[rank].value(spatial_point(p, nsd), p[nsd]);
    out.nodes.push_back(node);
    for (int i = 0; i < nsd; ++i) out.values.push_back(v[i]);
  }
  return out;
}

Assembler::Assembler(const Discretization& disc, Physics physics, BCSpec bcs, PressureGauge gauge)
    : disc_(&disc), physics_(std::move(physics)), bcs_(std::move(bcs)) {
  if (!(physics_.material.rho > 0.0) || physics_.material.mu < 0.0)
    throw ConfigurationError("material needs rho > 0 and mu >= 0");
  const auto dir_ids = tags_in_mesh(disc, bcs_.dirichlet, "Dirichlet");
  const auto neu_ids = tags_in_mesh(disc, bcs_.neumann, "Neumann");
  for (int id : neu_ids)
    if (std::find(dir_ids.begin(), dir_ids.end(), id) != dir_ids.end())
      throw ConfigurationError("tag '" + disc.tags[id] + "' is both Dirichlet and Neumann");

  dirichlet_ = dirichlet_values(disc, bcs_);
  bool all_dirichlet = !disc.mantle.empty();
  for (std::size_t f = 0; f < disc.mantle.size(); ++f) {
    const int tag = disc.mantle[f].tag;
    if (std::find(dir_ids.begin(), dir_ids.end(), tag) == dir_ids.end()) all_dirichlet = false;
    const auto it = std::find(neu_ids.begin(), neu_ids.end(), tag);
    if (it != neu_ids.end()) {
      neumann_facets_.push_back(static_cast<int>(f));
      neumann_bc_.push_back(static_cast<int>(it - neu_ids.begin()));
    }
  }
  const bool pin = gauge == PressureGauge::on || (gauge == PressureGauge::automatic && all_dirichlet);
  if (pin) {
    std::vector<int> first(disc.num_levels, -1);
    for (int i = 0; i < disc.num_nodes(); ++i) {
      int& f = first[disc.node_level[i]];
      if (f < 0) f = i;
    }
    for (int n : first)
      if (n >= 0) gauge_dofs_.push_back(n * block_size() + disc.nsd);
  }
  graph_ = build_node_graph(disc.num_nodes(), disc.connectivity, disc.nodes_per_element);
}

void Assembler::set_previous_state(std::vector<double> nodal_velocity) {
  int max_id = -1;
  for (int id : disc_->bottom_facets) max_id = std::max(max_id, id);
  if (static_cast<int>(nodal_velocity.size()) < (max_id + 1) * disc_->nsd)
    throw MissingPreviousState("previous state does not cover the bottom nodes");
  previous_ = std::move(nodal_velocity);
}

std::vector<double> Assembler::initial_guess() const {
  const int nsd = disc_->nsd;
  std::vector<double> x(num_dofs(), 0.0);
  if (bcs_.initial) {
    for (int i = 0; i < disc_->num_nodes(); ++i) {
      const Vec3 v = bcs_.initial(spatial_point(disc_->node(i), nsd), disc_->node(0)[nsd]);
      for (int c = 0; c < nsd; ++c) x[i * block_size() + c] = v[c];
    }
  }
  apply_constraints(x);
  return x;
}

void Assembler::apply_constraints(std::span<double> x) const {
  const int nsd = disc_->nsd;
  for (std::size_t k = 0; k < dirichlet_.nodes.size(); ++k)
    for (int c = 0; c < nsd; ++c) x[dirichlet_.nodes[k] * block_size() + c] = dirichlet_.values[k * nsd + c];
  for (int dof : gauge_dofs_) x[dof] = 0.0;
}

TauField Assembler::compute_tau(std::span<const double> x) const {
  const int ne = disc_->num_elements();
  const int nsd = disc_->nsd;
  const int nen = disc_->nodes_per_element;
  const double nu = physics_.material.nu();
  TauField tau;
  tau.mom.resize(ne);
  tau.cont.resize(ne);
  dispatch(*disc_, [&](auto k) {
    using K = decltype(k);
    using MatD = typename K::MatD;
    for (int e = 0; e < ne; ++e) {
      const MatD g = K::metric(*disc_, e);
      Eigen::Matrix<double, K::D, 1> uh = Eigen::Matrix<double, K::D, 1>::Zero();
      if (physics_.convection) {
        for (int id : disc_->element(e))
          for (int c = 0; c < nsd; ++c) uh(c) += x[id * block_size() + c];
        uh /= nen;
      }
      uh(nsd) = 1.0;
      const double sum = uh.dot(g * uh) + physics_.c_i * nu * nu * g.squaredNorm();
      if (!(sum > 0.0) || !std::isfinite(sum))
        throw NonFiniteTau("tau_MOM undefined in element " + std::to_string(e));
      tau.mom[e] = 1.0 / std::sqrt(sum);
      const double gg = g.diagonal().head(nsd).sum();
      const double denom = tau.mom[e] * gg;
      if (denom == 0.0 || !std::isfinite(denom))
        throw ZeroDenominator("tau_CONT undefined in element " + std::to_string(e));
      tau.cont[e] = 1.0 / denom;
    }
  });
  return tau;
}

void Assembler::element_kernel(int e, std::span<const double> x, double tau_mom, double tau_cont, double* re,
                               double* ke) const {
  const KernelInput in{physics_.material.rho, physics_.material.mu, physics_.convection ? 1.0 : 0.0,
                       &physics_.body_force};
  dispatch(*disc_, [&](auto k) {
    using K = decltype(k);
    double xe[K::NDOF];
    gather(*disc_, e, x, K::B, xe);
    K::integrate(*disc_, e, xe, in, tau_mom, tau_cont, re, ke);
    check_finite(re, K::NDOF, e);
  });
}

Eigen::VectorXd Assembler::element_residual(int e, std::span<const double> x, const TauField& tau) const {
  const int n = disc_->nodes_per_element * block_size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  element_kernel(e, x, tau.mom.at(e), tau.cont.at(e), r.data(), nullptr);
  return r;
}

Eigen::MatrixXd Assembler::element_jacobian_matrix(int e, std::span<const double> x, const TauField& tau) const {
  const int n = disc_->nodes_per_element * block_size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> k =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(n, n);
  element_kernel(e, x, tau.mom.at(e), tau.cont.at(e), r.data(), k.data());
  return k;
}

void Assembler::boundary_terms(std::span<const double> x, std::vector<double>* r, CsrMatrix* k) const {
  const Discretization& d = *disc_;
  const int nsd = d.nsd;
  const int bs = block_size();
  const double rho = physics_.material.rho;

  auto add_r = [&](int node, int c, double v) { (*r)[node * bs + c] += v; };
  auto add_k = [&](int a, int ra, int b, int cb, double v) {
    const int pos = graph_.position(a, b);
    k->values[block_offset(graph_, bs, a, ra, pos, cb)] += v;
  };

  // Jump term on the bottom cap.
  if (d.num_bottom_facets() > 0) {
    if (!previous_ && !bcs_.initial)
      throw MissingPreviousState("jump term needs an initial condition or a previous slab state");
    const QuadratureRule q = simplex_quadrature(nsd, 2);
    Eigen::MatrixXd jf(nsd, nsd);
    for (int f = 0; f < d.num_bottom_facets(); ++f) {
      const int* ids = d.bottom_facets.data() + f * (nsd + 1);
      auto x0 = d.node(ids[0]);
      for (int c = 0; c < nsd; ++c)
        for (int m = 0; m < nsd; ++m) jf(m, c) = d.node(ids[c + 1])[m] - x0[m];
      const double det = std::abs(jf.determinant());
      for (int qp = 0; qp < q.size(); ++qp) {
        const Eigen::VectorXd n = basis_eval(q.point(qp));
        const double w = q.weights[qp] * det;
        double up[3] = {}, um[3] = {};
        Vec3 xq{0.0, 0.0, 0.0};
        for (int a = 0; a <= nsd; ++a) {
          for (int c = 0; c < nsd; ++c) {
            up[c] += n(a) * x[ids[a] * bs + c];
            xq[c] += n(a) * d.node(ids[a])[c];
            if (previous_) um[c] += n(a) * (*previous_)[ids[a] * nsd + c];
          }
        }
        if (!previous_) {
          const Vec3 v = bcs_.initial(xq, x0[nsd]);
          for (int c = 0; c < nsd; ++c) um[c] = v[c];
        }
        for (int a = 0; a <= nsd; ++a) {
          if (r)
            for (int c = 0; c < nsd; ++c) add_r(ids[a], c, w * rho * n(a) * (up[c] - um[c]));
          if (k)
            for (int b = 0; b <= nsd; ++b)
              for (int c = 0; c < nsd; ++c) add_k(ids[a], c, ids[b], c, w * rho * n(a) * n(b));
        }
      }
    }
  }

  // Traction on Neumann mantle facets (residual only; h does not depend on
  // the unknowns).
  if (!r || neumann_facets_.empty()) return;
  for (std::size_t idx = 0; idx < neumann_facets_.size(); ++idx) {
    const MantleFacet& mf = d.mantle[neumann_facets_[idx]];
    const VectorField& h = bcs_.neumann[neumann_bc_[idx]].value;
    if (d.family == ElementFamily::simplex) {
      // Facet of nsd + 1 nodes in (nsd+1)-dimensional space-time.
      const int dim = nsd + 1;
      Eigen::MatrixXd e(dim, nsd);
      auto x0 = d.node(mf.nodes[0]);
      for (int c = 0; c < nsd; ++c)
        for (int m = 0; m < dim; ++m) e(m, c) = d.node(mf.nodes[c + 1])[m] - x0[m];
      Eigen::FullPivLU<Eigen::MatrixXd> lu(e.transpose());
      const Eigen::MatrixXd ker = lu.kernel();
      Eigen::VectorXd normal = ker.col(0).normalized();
      const double nx = normal.head(nsd).norm();
      const double scale = nx * gram_root(e);
      const QuadratureRule q = simplex_quadrature(nsd, 2);
      for (int qp = 0; qp < q.size(); ++qp) {
        const Eigen::VectorXd n = basis_eval(q.point(qp));
        Vec3 xq{0.0, 0.0, 0.0};
        double tq = 0.0;
        for (int a = 0; a <= nsd; ++a) {
          auto p = d.node(mf.nodes[a]);
          for (int c = 0; c < nsd; ++c) xq[c] += n(a) * p[c];
          tq += n(a) * p[nsd];
        }
        const Vec3 hv = h(xq, tq);
        const double w = q.weights[qp] * scale;
        for (int a = 0; a <= nsd; ++a)
          for (int c = 0; c < nsd; ++c) add_r(mf.nodes[a], c, -w * n(a) * hv[c]);
      }
    } else {
      // Spatial facet (nsd nodes) swept between the two slab levels.
      const int fd = nsd - 1;
      const QuadratureRule q = prism_quadrature(fd, 2);
      const double tb = d.node(mf.nodes[0])[nsd];
      const double tt = d.node(mf.nodes[nsd])[nsd];
      Eigen::MatrixXd es(nsd, fd);
      for (int qp = 0; qp < q.size(); ++qp) {
        auto pt = q.point(qp);
        const double th = pt[fd];
        const Eigen::VectorXd n = basis_eval(pt.first(fd));
        Vec3 xq{0.0, 0.0, 0.0};
        for (int a = 0; a < nsd; ++a) {
          auto pb = d.node(mf.nodes[a]);
          auto pt2 = d.node(mf.nodes[nsd + a]);
          for (int c = 0; c < nsd; ++c) xq[c] += n(a) * ((1.0 - th) * pb[c] + th * pt2[c]);
        }
        for (int c = 0; c < fd; ++c)
          for (int m = 0; m < nsd; ++m) {
            const double eb = d.node(mf.nodes[c + 1])[m] - d.node(mf.nodes[0])[m];
            const double et = d.node(mf.nodes[nsd + c + 1])[m] - d.node(mf.nodes[nsd])[m];
            es(m, c) = (1.0 - th) * eb + th * et;
          }
        const double tq = (1.0 - th) * tb + th * tt;
        const Vec3 hv = h(xq, tq);
        const double w = q.weights[qp] * gram_root(es) * (tt - tb);
        for (int a = 0; a < nsd; ++a)
          for (int c = 0; c < nsd; ++c) {
            add_r(mf.nodes[a], c, -w * n(a) * (1.0 - th) * hv[c]);
            add_r(mf.nodes[nsd + a], c, -w * n(a) * th * hv[c]);
          }
      }
    }
  }
}

std::vector<double> Assembler::residual(std::span<const double> x, const TauField& tau) const {
  if (static_cast<int>(x.size()) != num_dofs()) throw IndexOutOfRange("solution vector has wrong size");
  const int bs = block_size();
  const int nen = disc_->nodes_per_element;
  std::vector<double> r(num_dofs(), 0.0);
  std::vector<double> re(nen * bs);
  for (int e = 0; e < disc_->num_elements(); ++e) {
    std::fill(re.begin(), re.end(), 0.0);
    element_kernel(e, x, tau.mom[e], tau.cont[e], re.data(), nullptr);
    auto ids = disc_->element(e);
    for (int a = 0; a < nen; ++a)
      for (int c = 0; c < bs; ++c) r[ids[a] * bs + c] += re[a * bs + c];
  }
  boundary_terms(x, &r, nullptr);
  const int nsd = disc_->nsd;
  for (std::size_t k = 0; k < dirichlet_.nodes.size(); ++k)
    for (int c = 0; c < nsd; ++c) {
      const int dof = dirichlet_.nodes[k] * bs + c;
      r[dof] = x[dof] - dirichlet_.values[k * nsd + c];
    }
  for (int dof : gauge_dofs_) r[dof] = x[dof];
  return r;
}

LinearSystem Assembler::linearize(std::span<const double> x, const TauField& tau) const {
  if (static_cast<int>(x.size()) != num_dofs()) throw IndexOutOfRange("solution vector has wrong size");
  const int bs = block_size();
  const int nen = disc_->nodes_per_element;
  const int nloc = nen * bs;
  LinearSystem sys;
  sys.block_size = bs;
  sys.matrix = block_pattern(graph_, bs);
  std::vector<double> r(num_dofs(), 0.0);
  std::vector<double> re(nloc), ke(nloc * nloc);
  std::vector<int> pos(nen * nen);
  for (int e = 0; e < disc_->num_elements(); ++e) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(ke.begin(), ke.end(), 0.0);
    element_kernel(e, x, tau.mom[e], tau.cont[e], re.data(), ke.data());
    auto ids = disc_->element(e);
    for (int a = 0; a < nen; ++a)
      for (int b = 0; b < nen; ++b) pos[a * nen + b] = graph_.position(ids[a], ids[b]);
    for (int a = 0; a < nen; ++a) {
      for (int ra = 0; ra < bs; ++ra) {
        r[ids[a] * bs + ra] += re[a * bs + ra];
        const double* krow = ke.data() + (a * bs + ra) * nloc;
        for (int b = 0; b < nen; ++b) {
          double* dst = sys.matrix.values.data() + block_offset(graph_, bs, ids[a], ra, pos[a * nen + b], 0);
          for (int cb = 0; cb < bs; ++cb) dst[cb] += krow[b * bs + cb];
        }
      }
    }
  }
  boundary_terms(x, &r, &sys.matrix);
  const int nsd = disc_->nsd;
  for (std::size_t k = 0; k < dirichlet_.nodes.size(); ++k)
    for (int c = 0; c < nsd; ++c) {
      const int dof = dirichlet_.nodes[k] * bs + c;
      r[dof] = x[dof] - dirichlet_.values[k * nsd + c];
      sys.matrix.set_identity_row(dof);
    }
  for (int dof : gauge_dofs_) {
    r[dof] = x[dof];
    sys.matrix.set_identity_row(dof);
  }
  sys.rhs.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) sys.rhs[i] = -r[i];
  return sys;
}

}  // namespace stfem
