#pragma once

#include "mpct/model.hpp"

namespace mpct {

struct InvariantSetReport {
  Polytope set;
  int iterations = 0;
  bool converged = false;
  int removed_redundant = 0;
};

/// Raised when an invariant-set recursion hits its iteration cap. The report
/// holds the last iterate with converged = false so callers can inspect it or
/// fall back to a terminal equality constraint.
class NotConvergedError : public MpctError {
 public:
  NotConvergedError(const std::string& what, InvariantSetReport report)
      : MpctError(what), report_(std::move(report)) {}
  const InvariantSetReport& report() const { return report_; }

 private:
  InvariantSetReport report_;
};

struct InvariantSetOptions {
  int max_iter = 50;
  /// Rows whose LP maximum exceeds the bound by at most this much (relative
  /// to the row norm) are treated as redundant.
  double redundancy_tol = 1e-8;
};

double spectral_radius(const Matrix& A);

/// Maximal positively invariant set of z+ = A_cl z inside G.
///
/// Starting from G, each step adds the preimage of the rows added in the
/// previous step and keeps only candidates that are not implied by the
/// current set. The recursion has reached its fixpoint once a step adds no
/// non-redundant row.
InvariantSetReport max_invariant_set(const Matrix& A_cl, const Polytope& G,
                                     const InvariantSetOptions& options = {});

/// Invariant set for tracking over (x, xa, ua) under u = K(x - xa) + ua.
///
/// Steady states are parametrized by coordinates theta on the null space of
/// [A - I, B]; the maximal invariant set of the extended (x, theta) system is
/// mapped back, and the steady-state condition on (xa, ua) is kept as an
/// equality block.
InvariantSetReport invariant_set_for_tracking(const LinearSystem& sys, const Matrix& K, const Polytope& Z,
                                              double sigma, const InvariantSetOptions& options = {});

/// Terminal set for regulation to the steady state (xr, ur) under
/// u = ur + K(x - xr), expressed over x.
InvariantSetReport terminal_set_for_regulation(const LinearSystem& sys, const Matrix& K, const Polytope& Z,
                                               const Vector& xr, const Vector& ur,
                                               const InvariantSetOptions& options = {});

struct RpiApproximation {
  Zonotope set;
  int s = 0;
  double alpha = 0.0;
  /// 1 / (1 - alpha).
  double scaling = 1.0;
};

/// Outer approximation of the minimal robust positively invariant set of
/// e+ = A_K e + w, w in W: the smallest s with A_K^s W contained in alpha W
/// (alpha <= eps_alpha) gives (1 - alpha)^{-1} (W + A_K W + ... + A_K^{s-1} W).
/// W must be full dimensional and contain the origin in its interior, or be
/// the single point {0}.
RpiApproximation rpi_outer_approx(const Matrix& A_K, const Zonotope& W, double eps_alpha = 0.1,
                                  int max_s = 200);

/// Z minus (phi x K phi) in the Pontryagin sense, computed row by row from
/// the support function of the Cartesian product.
Polytope tighten(const Polytope& Z, const Zonotope& phi, const Matrix& K);

}  // namespace mpct
