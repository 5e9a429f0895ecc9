#pragma once

#include <Eigen/Dense>

namespace mpct::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd z;
  double value = 0.0;
  int pivots = 0;
};

struct LpOptions {
  double pivot_tol = 1e-10;
  /// Phase-one infeasibility threshold on row-normalized constraints.
  double feasibility_tol = 1e-9;
  int max_pivots = 50000;
};

/// maximize c'z  s.t.  F z <= g,  Feq z = geq,  z free.
///
/// Dense two-phase tableau simplex (Dantzig pricing with a Bland fallback on
/// degenerate stalls). Each call owns its tableau, so concurrent calls are
/// independent.
LpResult maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq,
                  const LpOptions& options = {});

/// Phase-one only: returns a feasible point or an Infeasible status.
LpResult find_feasible(const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                       const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq,
                       const LpOptions& options = {});

}  // namespace mpct::lp
