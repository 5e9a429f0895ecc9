#pragma once

// Pieces shared by the standard and extended ADMM solvers.

#include <limits>
#include <utility>
#include <vector>

#include "mpct/solver.hpp"

namespace mpct::detail {

struct ConeBlock {
  int start;  // first row inside the stacked constraint matrix
  int size;
};

/// Constraint rows of a program stacked as A z in C, with C a product of
/// boxes [l, u] (equality and inequality rows) and shifted cones K - b.
struct ConstraintSet {
  SparseMatrix A;
  Vector l, u;
  int num_eq = 0;
  int num_box = 0;
  std::vector<ConeBlock> cones;
  Vector cone_shift;  // b of every cone row, indexed from num_box

  int rows() const { return static_cast<int>(A.rows()); }
  void project(Eigen::Ref<Vector> v) const;
  /// Per-row penalty: rho for inequality and cone rows, rho * eq_scale for
  /// equality rows.
  Vector penalties(double rho, double eq_scale) const;
};

ConstraintSet stack_constraints(const StructuredProgram& prog);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double eps_primal = 0.0;
  double eps_dual = 0.0;
  double primal_scale = 0.0;
  double dual_scale = 0.0;
};

Residuals compute_residuals(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& x,
                            const Vector& z, const Vector& y, const SolverSettings& s);

bool primal_infeasible(const ConstraintSet& cs, const Vector& dy, double eps);
bool dual_infeasible(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& dx, double eps);

struct PolishOutcome {
  bool accepted = false;
  Vector x, z, y;
};

/// Solves the KKT system of the equality-constrained QP formed by the rows
/// that (z, y) flag as active.
PolishOutcome polish(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& z,
                     const Vector& y);

/// Runs polish() and adopts its point when the multiplier signs are valid
/// and neither residual gets worse. Returns true when adopted.
bool refine_by_polish(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const SolverSettings& s,
                      Vector& x, Vector& z, Vector& y, Residuals& rr);

/// Cost of the matrix-vector products performed in one iteration.
long long matvec_flops(const SparseMatrix& P, const SparseMatrix& A);

/// Objective z'Hz + q'z + c evaluated with P = 2H.
inline double objective_from(const SparseMatrix& P, const Vector& q, double c, const Vector& x) {
  return 0.5 * x.dot(P * x) + q.dot(x) + c;
}

}  // namespace mpct::detail
