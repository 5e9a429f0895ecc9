#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mpct/program.hpp"

namespace mpct {

enum class SolveStatus { Solved, MaxIter, PrimalInfeasible, DualInfeasible };
const char* to_string(SolveStatus status);

/// Linear-system backend used inside ADMM.
enum class LinearBackend {
  Auto,        // Structured when the program carries a low-rank descriptor, Sparse otherwise
  Structured,  // envelope Cholesky of the banded part plus a Woodbury correction
  Sparse,      // sparse LDL' of the full matrix
  Dense,       // dense Cholesky of the full matrix
};
const char* to_string(LinearBackend backend);
LinearBackend backend_from_string(const std::string& name);

struct SolverSettings {
  double rho = 1.0;
  double sigma = 1e-6;
  /// Over-relaxation parameter in (0, 2).
  double alpha = 1.6;
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_prim_inf = 1e-7;
  double eps_dual_inf = 1e-7;
  int max_iter = 20000;
  /// Termination is checked every `check_interval` iterations.
  int check_interval = 5;
  bool adaptive_rho = false;
  int adaptive_rho_interval = 50;
  /// Equality rows use rho * eq_rho_scale.
  double eq_rho_scale = 1e3;
  LinearBackend backend = LinearBackend::Auto;
  /// Refine the ADMM iterate by solving the KKT system of the guessed active
  /// set (QPs only); the refined point is kept when it is at least as accurate.
  bool polish = true;
  bool record_history = false;
  /// Drop the objective and only look for a feasible point.
  bool feasibility_only = false;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
};

struct SolveResult {
  Vector z;  // primal solution
  Vector y;  // multipliers: equality rows, inequality rows, then cone rows
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  bool polished = false;
  std::string backend;
  /// Operation counts of the linear algebra (not wall time).
  long long linsolve_flops_per_iter = 0;
  long long iteration_flops = 0;
  long long factor_flops = 0;
  std::vector<IterationRecord> history;
};

struct WarmStart {
  Vector z;
  Vector y;
};

/// Euclidean projection of (s, t) onto {||s||_2 <= t}.
std::pair<Vector, double> project_soc(const Vector& s, double t);

/// Operator-splitting solver for structured QPs and SOCPs.
///
/// Iterates on (P + sigma I + A' R A) x = sigma x - q + A'(R z - y) with
/// A = [Aeq; F; cone maps]. The solver keeps its factorization between calls
/// and reuses it when the Hessian, constraint matrix and penalties are
/// unchanged, which is the common case in a closed loop. Instances are not
/// thread safe; use one per thread.
class AdmmSolver {
 public:
  explicit AdmmSolver(SolverSettings settings = {});
  ~AdmmSolver();
  AdmmSolver(AdmmSolver&&) noexcept;
  AdmmSolver& operator=(AdmmSolver&&) noexcept;

  SolveResult solve(const StructuredProgram& prog, const WarmStart* warm = nullptr);
  const SolverSettings& settings() const { return settings_; }
  /// Number of matrix factorizations performed so far.
  int factorizations() const;

 private:
  struct Workspace;
  SolverSettings settings_;
  std::unique_ptr<Workspace> ws_;
};

/// Standard ADMM on a QP (throws std::invalid_argument for SOCPs).
SolveResult admm_qp(const StructuredProgram& prog, const SolverSettings& settings = {});
/// ADMM with mixed box and second-order-cone projections.
SolveResult admm_socp(const StructuredProgram& prog, const SolverSettings& settings = {});

/// ADMM with the decision vector split into the reference block and the
/// remaining (banded) variables. Each iteration runs a symmetric
/// Gauss-Seidel sweep over the two primal blocks, so the large subproblem is
/// purely banded and no Woodbury correction is needed. Requires a program
/// with a low-rank descriptor; QPs and SOCPs are both accepted.
SolveResult admm_qp_extended(const StructuredProgram& prog, const SolverSettings& settings = {});

struct ReferenceSolverOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// Dense primal-dual interior-point method (Nesterov-Todd scaling with a
/// Mehrotra corrector) for the same program class. Meant as a test oracle for
/// problems of moderate size.
SolveResult dense_reference_solve(const StructuredProgram& prog, const ReferenceSolverOptions& options = {});

/// KKT residuals of (z, y) for a program, with y ordered as in SolveResult:
/// returns (primal infeasibility, stationarity, complementarity) in the
/// infinity norm; cone multipliers must lie in the (self-dual) cone.
struct KktResiduals {
  double primal = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double dual_feasibility = 0.0;
  double max() const;
};
KktResiduals kkt_residuals(const StructuredProgram& prog, const Vector& z, const Vector& y);

}  // namespace mpct
