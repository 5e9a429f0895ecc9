#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpct/model.hpp"
#include "mpct/setops.hpp"

namespace mpct {

struct LqrResult {
  Matrix P;
  Matrix K;
  int iterations = 0;
  /// Infinity norm of the Riccati residual at P.
  double residual = 0.0;
};

/// Stabilizing solution of the discrete algebraic Riccati equation and the
/// matching gain K = -(R + B'PB)^{-1} B'PA (so that u = Kx).
///
/// Solved with the structure-preserving doubling algorithm followed by a few
/// fixed-point refinement sweeps. Throws NoStabilizingSolutionError when the
/// iteration does not settle or A + BK is not Schur.
LqrResult dare_lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double tol = 1e-10,
                   int max_iter = 100);

/// Infinity norm of A'PA - P - A'PB (R + B'PB)^{-1} B'PA + Q.
double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& P);

/// P solving P - (A+BK)'P(A+BK) = Q + K'RK, by a direct solve of the
/// vectorized equation. Throws NotSchurError if A + BK is not Schur.
Matrix lyapunov_terminal_cost(const Matrix& A, const Matrix& B, const Matrix& K, const Matrix& Q, const Matrix& R);

/// Weights, gains and horizon shared by every controller of the family.
///
/// S weighs the output offset of the artificial reference; T and Su weigh the
/// state and input offsets of the terminal-equality and harmonic variants;
/// Th and Sh weigh the harmonic amplitudes. Kbar is the terminal gain of the
/// robust variant (equal to K unless designed separately).
struct TrackingDesign {
  Matrix Q, R;
  Matrix S, T, Su, Th, Sh;
  Matrix P, K, Kbar;
  int N = 10;
  double sigma = 0.99;
  double omega = 0.0;
  double gamma = 0.0;
};

/// Fills P and K from the DARE for (Q, R), sets Kbar = K and identity offset
/// weights sized for `sys`.
TrackingDesign make_design(const LinearSystem& sys, const Matrix& Q, const Matrix& R, int N, double sigma = 0.99);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  /// Signed slack of the check; negative values quantify the violation.
  double margin = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> warnings;

  bool certified() const;
  const ValidationCheck* find(const std::string& name) const;
};

struct ValidationOptions {
  int samples = 1000;
  std::uint64_t seed = 7;
  double tol = 1e-8;
};

/// Observability of (Q^{1/2}, A) via the PBH test; returns the smallest
/// singular value of [A - lambda I; Q^{1/2}] over the eigenvalues of A.
double observability_margin(const Matrix& A, const Matrix& Q);

/// Checks the design ingredients of the nominal tracking controller: (Q^{1/2}, A)
/// observability, N >= controllability index, Schur K, the Lyapunov decrease
/// inequality for P, sampled invariance of Xt (when given) and S > 0.
ValidationReport validate_assumption1(const LinearSystem& sys, const TrackingDesign& design, const Polytope& Z,
                                      const InvariantSetReport* Xt, const ValidationOptions& options = {});

/// Checks of the robust variant: observability, R and S positive definite,
/// Schur K and Kbar, robust invariance of phi on extreme samples, nonempty
/// tightened set, the Lyapunov equation for P with Kbar and sampled
/// invariance of the tightened set for tracking.
ValidationReport validate_assumption2(const LinearSystem& sys, const TrackingDesign& design, const Zonotope& W,
                                      const Zonotope& phi, const Polytope& Zbar, const InvariantSetReport* Xt_bar,
                                      const ValidationOptions& options = {});

/// Sampled one-step invariance of a set for tracking: every sample
/// (x, xa, ua) must satisfy (x, K(x - xa) + ua) in Z and its successor must
/// stay in Xt. Returns the largest violation seen (<= tol means pass).
double sampled_tracking_invariance(const LinearSystem& sys, const Matrix& K, const Polytope& Z, const Polytope& Xt,
                                   int samples, std::uint64_t seed);

}  // namespace mpct
