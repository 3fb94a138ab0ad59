#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stfem/assembly.hpp"
#include "stfem/sparse.hpp"

namespace stfem {

enum class LinearMethod { gmres_restarted, direct_lu };
enum class Preconditioner { jacobi_block, ilu0, none };
enum class LineSearch { none, backtracking };

struct LinearSolverConfig {
  LinearMethod method = LinearMethod::gmres_restarted;
  int restart = 60;
  int max_krylov_iter = 2000;
  double lin_rel_tol = 1e-8;
  Preconditioner preconditioner = Preconditioner::ilu0;
  /// Systems up to this size are re-solved with direct_lu when GMRES
  /// stagnates or breaks down.
  int direct_fallback_max = 20000;
  /// Larger systems accept a stagnated GMRES result at or below this
  /// relative residual (rounding floor of the preconditioned iteration).
  double stagnation_accept = 1e-5;
};

struct NewtonConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  int max_iter = 30;
  LineSearch linesearch = LineSearch::none;
  LinearSolverConfig linear;
  bool log = true;  // `newton iter=<k> res=<value>` lines on stderr
};

struct LinearSolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool used_direct = false;
};

/// Restarted GMRES with right preconditioning. Throws LinearSolveFailure on
/// stagnation or breakdown unless the system is small enough for the direct
/// fallback.
std::vector<double> gmres_solve(const CsrMatrix& a, std::span<const double> b, const LinearSolverConfig& cfg,
                                LinearSolveStats* stats = nullptr, int block_size = 1);

/// Sparse LU with column approximate minimum degree ordering.
std::vector<double> direct_lu(const CsrMatrix& a, std::span<const double> b);

std::vector<double> linear_solve(const LinearSystem& sys, const LinearSolverConfig& cfg,
                                 LinearSolveStats* stats = nullptr);

/// Anything that provides a residual and a Newton system at an iterate.
class NonlinearProblem {
 public:
  virtual ~NonlinearProblem() = default;
  virtual int size() const = 0;
  /// Called once per Newton iteration before residual/linearize (e.g. to
  /// refresh frozen coefficients).
  virtual void prepare(std::span<const double> x) { (void)x; }
  virtual std::vector<double> residual(std::span<const double> x) = 0;
  /// Matrix and right-hand side -R(x).
  virtual LinearSystem linearize(std::span<const double> x) = 0;
};

/// Stabilized flow problem: tau is recomputed at every Newton iterate and
/// frozen within it.
class AssemblerProblem final : public NonlinearProblem {
 public:
  explicit AssemblerProblem(const Assembler& assembler) : assembler_(&assembler) {}
  int size() const override { return assembler_->num_dofs(); }
  void prepare(std::span<const double> x) override { tau_ = assembler_->compute_tau(x); }
  std::vector<double> residual(std::span<const double> x) override { return assembler_->residual(x, tau_); }
  LinearSystem linearize(std::span<const double> x) override { return assembler_->linearize(x, tau_); }

 private:
  const Assembler* assembler_;
  TauField tau_;
};

enum class NewtonStatus { converged, max_iterations_exceeded };

struct NewtonResult {
  std::vector<double> solution;  // converged field, or best iterate
  NewtonStatus status = NewtonStatus::converged;
  int iterations = 0;                    // linear solves performed
  std::vector<double> residual_norms;    // per iterate, starting at x0
  std::vector<int> linear_iterations;
  bool converged() const noexcept { return status == NewtonStatus::converged; }
};

/// Newton-Raphson until ||R|| <= max(abs_tol, rel_tol ||R_0||). Reaching
/// max_iter is reported in the status and returns the best iterate.
NewtonResult newton_solve(NonlinearProblem& problem, std::vector<double> x0, const NewtonConfig& cfg);

std::string to_string(LinearMethod m);
std::string to_string(Preconditioner p);

}  // namespace stfem
