#include "stfem/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "stfem/error.hpp"

namespace stfem {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class Precond {
 public:
  virtual ~Precond() = default;
  virtual void apply(std::span<const double> in, std::span<double> out) const = 0;
};

class Identity final : public Precond {
 public:
  void apply(std::span<const double> in, std::span<double> out) const override {
    std::copy(in.begin(), in.end(), out.begin());
  }
};

class BlockJacobi final : public Precond {
 public:
  BlockJacobi(const CsrMatrix& a, int block) : block_(block) {
    if (a.rows % block != 0) block_ = block = 1;
    const int nb = a.rows / block;
    inv_.resize(nb);
    for (int n = 0; n < nb; ++n) {
      Eigen::MatrixXd d(block, block);
      for (int r = 0; r < block; ++r)
        for (int c = 0; c < block; ++c) d(r, c) = a.at(n * block + r, n * block + c);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
      inv_[n] = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse()) : Eigen::MatrixXd::Identity(block, block);
    }
  }
  void apply(std::span<const double> in, std::span<double> out) const override {
    for (std::size_t n = 0; n < inv_.size(); ++n) {
      const auto o = n * block_;
      for (int r = 0; r < block_; ++r) {
        double s = 0.0;
        for (int c = 0; c < block_; ++c) s += inv_[n](r, c) * in[o + c];
        out[o + r] = s;
      }
    }
  }

 private:
  int block_;
  std::vector<Eigen::MatrixXd> inv_;
};

// Incomplete LU with the sparsity of A (unit lower factor stored below the
// diagonal).
class Ilu0 final : public Precond {
 public:
  explicit Ilu0(const CsrMatrix& a) : lu_(a), diag_(a.rows) {
    const int n = a.rows;
    for (int i = 0; i < n; ++i) {
      const double* p = lu_.find(i, i);
      if (!p) throw LinearSolveFailure("ILU(0) needs a structurally nonzero diagonal");
      diag_[i] = static_cast<int>(p - lu_.values.data());
    }
    std::vector<int> where(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k) where[lu_.col_idx[k]] = k;
      for (int k = lu_.row_ptr[i]; k < diag_[i]; ++k) {
        const int j = lu_.col_idx[k];
        double pivot = lu_.values[diag_[j]];
        if (pivot == 0.0) pivot = 1e-300;
        const double l = lu_.values[k] / pivot;
        lu_.values[k] = l;
        for (int m = diag_[j] + 1; m < lu_.row_ptr[j + 1]; ++m) {
          const int w = where[lu_.col_idx[m]];
          if (w >= 0) lu_.values[w] -= l * lu_.values[m];
        }
      }
      for (int k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k) where[lu_.col_idx[k]] = -1;
      if (lu_.values[diag_[i]] == 0.0) lu_.values[diag_[i]] = 1e-300;
    }
  }
  void apply(std::span<const double> in, std::span<double> out) const override {
    const int n = lu_.rows;
    for (int i = 0; i < n; ++i) {
      double s = in[i];
      for (int k = lu_.row_ptr[i]; k < diag_[i]; ++k) s -= lu_.values[k] * out[lu_.col_idx[k]];
      out[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = out[i];
      for (int k = diag_[i] + 1; k < lu_.row_ptr[i + 1]; ++k) s -= lu_.values[k] * out[lu_.col_idx[k]];
      out[i] = s / lu_.values[diag_[i]];
    }
  }

 private:
  CsrMatrix lu_;
  std::vector<int> diag_;
};

// Reverse Cuthill-McKee order of the node-block graph of a, one entry per
// block; starts each component from a minimum-degree node.
std::vector<int> rcm_block_order(const CsrMatrix& a, int b) {
  const int nb = a.rows / b;
  std::vector<std::vector<int>> adj(nb);
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const int i = r / b, j = a.col_idx[k] / b;
      if (i != j) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::vector<int> nodes(nb);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::stable_sort(nodes.begin(), nodes.end(), [&](int x, int y) { return adj[x].size() < adj[y].size(); });
  std::vector<int> order;
  order.reserve(nb);
  std::vector<char> seen(nb, 0);
  for (int start : nodes) {
    if (seen[start]) continue;
    seen[start] = 1;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      const int v = order[head++];
      std::vector<int> next;
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          next.push_back(w);
        }
      std::stable_sort(next.begin(), next.end(), [&](int x, int y) { return adj[x].size() < adj[y].size(); });
      order.insert(order.end(), next.begin(), next.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

// Wraps a preconditioner built on the symmetrically permuted matrix P A P^T.
class Permuted final : public Precond {
 public:
  Permuted(const CsrMatrix& a, int b, std::vector<int> block_order,
           const std::function<std::unique_ptr<Precond>(const CsrMatrix&)>& make)
      : perm_(a.rows), in_(a.rows), out_(a.rows) {
    const int nb = a.rows / b;
    for (int n = 0; n < nb; ++n)
      for (int c = 0; c < b; ++c) perm_[n * b + c] = block_order[n] * b + c;  // new -> old
    std::vector<int> inv(a.rows);
    for (int i = 0; i < a.rows; ++i) inv[perm_[i]] = i;
    CsrMatrix p;
    p.rows = p.cols = a.rows;
    p.row_ptr.assign(a.rows + 1, 0);
    p.col_idx.reserve(a.col_idx.size());
    p.values.reserve(a.values.size());
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < a.rows; ++i) {
      const int r = perm_[i];
      row.clear();
      for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) row.emplace_back(inv[a.col_idx[k]], a.values[k]);
      std::sort(row.begin(), row.end());
      for (const auto& [c, v] : row) {
        p.col_idx.push_back(c);
        p.values.push_back(v);
      }
      p.row_ptr[i + 1] = static_cast<int>(p.col_idx.size());
    }
    inner_ = make(p);
  }
  void apply(std::span<const double> in, std::span<double> out) const override {
    for (std::size_t i = 0; i < perm_.size(); ++i) in_[i] = in[perm_[i]];
    inner_->apply(in_, out_);
    for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = out_[i];
  }

 private:
  std::vector<int> perm_;
  mutable std::vector<double> in_, out_;
  std::unique_ptr<Precond> inner_;
};

std::unique_ptr<Precond> make_preconditioner(const CsrMatrix& a, Preconditioner kind, int block) {
  switch (kind) {
    case Preconditioner::ilu0: {
      if (block < 1 || a.rows % block != 0) block = 1;
      return std::make_unique<Permuted>(a, block, rcm_block_order(a, block),
                                        [](const CsrMatrix& p) { return std::make_unique<Ilu0>(p); });
    }
    case Preconditioner::jacobi_block: return std::make_unique<BlockJacobi>(a, block);
    case Preconditioner::none: break;
  }
  return std::make_unique<Identity>();
}

enum class GmresOutcome { converged, stagnation, breakdown, max_iterations };

GmresOutcome gmres_core(const CsrMatrix& a, std::span<const double> b, const Precond& m,
                        const LinearSolverConfig& cfg, std::vector<double>& x, LinearSolveStats& st) {
  const int n = a.rows;
  const int restart = std::max(1, cfg.restart);
  const double bnorm = norm2(b);
  x.assign(n, 0.0);
  st.iterations = 0;
  if (bnorm == 0.0) {
    st.relative_residual = 0.0;
    return GmresOutcome::converged;
  }
  const double target = cfg.lin_rel_tol * bnorm;
  std::vector<std::vector<double>> v(restart + 1, std::vector<double>(n));
  std::vector<double> h((restart + 1) * restart), cs(restart), sn(restart), g(restart + 1);
  std::vector<double> r(n), z(n), w(n);
  auto H = [&](int i, int j) -> double& { return h[i * restart + j]; };

  double prev_cycle = std::numeric_limits<double>::infinity();
  while (true) {
    a.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double beta = norm2(r);
    st.relative_residual = beta / bnorm;
    if (beta <= target) return GmresOutcome::converged;
    if (st.iterations >= cfg.max_krylov_iter) return GmresOutcome::max_iterations;
    if (beta > (1.0 - 1e-3) * prev_cycle) return GmresOutcome::stagnation;
    prev_cycle = beta;

    for (int i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int j = 0;
    bool broke = false;
    for (; j < restart && st.iterations < cfg.max_krylov_iter; ++j) {
      ++st.iterations;
      m.apply(v[j], z);
      a.multiply(z, w);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = dot(w, v[i]);
        for (int k = 0; k < n; ++k) w[k] -= H(i, j) * v[i][k];
      }
      const double hn = norm2(w);
      H(j + 1, j) = hn;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double den = std::hypot(H(j, j), H(j + 1, j));
      if (den == 0.0) {
        broke = true;
        break;
      }
      cs[j] = H(j, j) / den;
      sn[j] = H(j + 1, j) / den;
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] *= cs[j];
      const bool done = std::abs(g[j + 1]) <= target;
      if (hn <= 1e-14 * bnorm || done) {
        ++j;
        break;
      }
      for (int k = 0; k < n; ++k) v[j + 1][k] = w[k] / hn;
    }
    // Back substitution and update x += M^-1 V y.
    std::vector<double> y(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H(i, k) * y[k];
      y[i] = s / H(i, i);
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < j; ++i)
      for (int k = 0; k < n; ++k) w[k] += y[i] * v[i][k];
    m.apply(w, z);
    for (int k = 0; k < n; ++k) x[k] += z[k];
    if (broke) {
      a.multiply(x, r);
      for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
      st.relative_residual = norm2(r) / bnorm;
      return st.relative_residual <= cfg.lin_rel_tol ? GmresOutcome::converged : GmresOutcome::breakdown;
    }
  }
}

}  // namespace

std::vector<double> direct_lu(const CsrMatrix& a, std::span<const double> b) {
  if (a.rows != a.cols || static_cast<int>(b.size()) != a.rows) throw LinearSolveFailure("direct_lu: size mismatch");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.values.size());
  for (int r = 0; r < a.rows; ++r)
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) trip.emplace_back(r, a.col_idx[k], a.values[k]);
  Eigen::SparseMatrix<double> m(a.rows, a.cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw LinearSolveFailure("sparse LU factorization failed: " + lu.lastErrorMessage());
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), a.rows);
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw LinearSolveFailure("sparse LU solve failed");
  return {x.data(), x.data() + x.size()};
}

std::vector<double> gmres_solve(const CsrMatrix& a, std::span<const double> b, const LinearSolverConfig& cfg,
                                LinearSolveStats* stats, int block_size) {
  if (a.rows != a.cols || static_cast<int>(b.size()) != a.rows) throw LinearSolveFailure("gmres: size mismatch");
  if (cfg.restart < 1) throw ConfigurationError("GMRES restart must be >= 1");
  LinearSolveStats st;
  const auto m = make_preconditioner(a, cfg.preconditioner, block_size);
  std::vector<double> x;
  const GmresOutcome out = gmres_core(a, b, *m, cfg, x, st);
  if (out != GmresOutcome::converged) {
    if (a.rows > cfg.direct_fallback_max) {
      if (out == GmresOutcome::stagnation && st.relative_residual <= cfg.stagnation_accept) {
        st.converged = true;
        if (stats) *stats = st;
        return x;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", st.relative_residual);
      const char* why = out == GmresOutcome::breakdown    ? "breakdown"
                        : out == GmresOutcome::stagnation ? "stagnation"
                                                          : "iteration limit";
      throw LinearSolveFailure(std::string("GMRES ") + why + " at relative residual " + buf);
    }
    x = direct_lu(a, b);
    st.used_direct = true;
    std::vector<double> r(a.rows);
    a.multiply(x, r);
    for (int i = 0; i < a.rows; ++i) r[i] = b[i] - r[i];
    const double bn = norm2(b);
    st.relative_residual = bn > 0.0 ? norm2(r) / bn : 0.0;
  }
  st.converged = true;
  if (stats) *stats = st;
  return x;
}

std::vector<double> linear_solve(const LinearSystem& sys, const LinearSolverConfig& cfg, LinearSolveStats* stats) {
  if (cfg.method == LinearMethod::direct_lu) {
    auto x = direct_lu(sys.matrix, sys.rhs);
    if (stats) {
      *stats = {};
      stats->used_direct = true;
      stats->converged = true;
    }
    return x;
  }
  return gmres_solve(sys.matrix, sys.rhs, cfg, stats, sys.block_size);
}

NewtonResult newton_solve(NonlinearProblem& problem, std::vector<double> x0, const NewtonConfig& cfg) {
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_iter < 1)
    throw ConfigurationError("Newton tolerances must be positive and max_iter >= 1");
  if (static_cast<int>(x0.size()) != problem.size()) throw IndexOutOfRange("initial guess has wrong size");
  NewtonResult res;
  std::vector<double> x = std::move(x0);
  std::vector<double> best = x;
  double best_norm = std::numeric_limits<double>::infinity();
  double r0 = 0.0;
  for (int k = 0;; ++k) {
    problem.prepare(x);
    const std::vector<double> r = problem.residual(x);
    const double rn = norm2(r);
    if (!std::isfinite(rn)) throw NonFiniteResidual("Newton residual is not finite at iteration " + std::to_string(k));
    res.residual_norms.push_back(rn);
    if (cfg.log) std::fprintf(stderr, "newton iter=%d res=%.6e\n", k, rn);
    if (k == 0) r0 = rn;
    if (rn < best_norm) {
      best_norm = rn;
      best = x;
    }
    if (rn <= std::max(cfg.abs_tol, cfg.rel_tol * r0)) {
      res.status = NewtonStatus::converged;
      res.iterations = k;
      res.solution = std::move(x);
      return res;
    }
    if (k == cfg.max_iter) {
      res.status = NewtonStatus::max_iterations_exceeded;
      res.iterations = k;
      res.solution = std::move(best);
      return res;
    }
    const LinearSystem sys = problem.linearize(x);
    LinearSolveStats st;
    const std::vector<double> dx = linear_solve(sys, cfg.linear, &st);
    res.linear_iterations.push_back(st.iterations);

    double alpha = 1.0;
    std::vector<double> trial(x.size());
    for (int ls = 0;; ++ls) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * dx[i];
      if (cfg.linesearch == LineSearch::none || ls == 8) break;
      const double tn = norm2(problem.residual(trial));
      if (std::isfinite(tn) && tn <= (1.0 - 1e-4 * alpha) * rn) break;
      alpha *= 0.5;
    }
    x.swap(trial);
  }
}

std::string to_string(LinearMethod m) { return m == LinearMethod::direct_lu ? "direct_lu" : "gmres_restarted"; }

std::string to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::ilu0: return "ilu0";
    case Preconditioner::jacobi_block: return "jacobi_block";
    case Preconditioner::none: break;
  }
  return "none";
}

}  // namespace stfem
