#pragma once

#include <vector>

#include "mpct/formulations.hpp"

namespace mpct {

struct SteadyState {
  Vector x;
  Vector u;
};

/// Least-norm admissible steady state (x, u) in sigma Z with C x + D u = yr.
/// Throws UnreachableReferenceError when yr is not a reachable setpoint.
SteadyState steady_state_for_ref(const LinearSystem& sys, const Polytope& Z, double sigma, const Vector& yr);

/// Least-norm steady state whose output is closest to yr, ignoring the
/// constraints. Used to turn an output reference into the (xr, ur) target of
/// the terminal-equality and harmonic controllers.
SteadyState steady_state_target(const LinearSystem& sys, const Vector& yr);

/// Minimizer of the economic cost over the admissible steady states.
/// Throws EmptySetError when there is no admissible steady state.
SteadyState economic_setpoint(const LinearSystem& sys, const Polytope& Z, double sigma, const EconomicCost& cost,
                              const Vector& theta);

/// Admissible steady state in sigma Z closest to (xr, ur) in the weighted
/// norm ||x - xr||_T^2 + ||u - ur||_Su^2.
SteadyState closest_steady_state(const LinearSystem& sys, const Polytope& Z, double sigma, const Vector& xr,
                                 const Vector& ur, const Matrix& T, const Matrix& Su);

enum class OffsetKind {
  Quadratic,  // ||y - yr||_S^2
  Norm,       // ||S^{1/2} (y - yr)||_2
};

struct ReachableReference {
  Vector ya;
  SteadyState steady;
  double offset = 0.0;
};

/// argmin of the offset cost over the reachable setpoints.
ReachableReference optimal_reachable_reference(const LinearSystem& sys, const Polytope& Z, double sigma,
                                               const Vector& yr, const Matrix& S,
                                               OffsetKind kind = OffsetKind::Quadratic);

struct PeriodicReference {
  std::vector<Vector> ya;
  std::vector<Vector> xa;  // tau + 1 samples, xa[tau] = xa[0]
  std::vector<Vector> ua;
  double offset = 0.0;
};

/// Reachable periodic trajectory of period tau closest to yr_traj in the
/// periodic offset sum_k ||ya_k - yr_k||_S^2.
PeriodicReference optimal_periodic_reference(const LinearSystem& sys, const Polytope& Z, double sigma, int tau,
                                             const std::vector<Vector>& yr_traj, const Matrix& S);

}  // namespace mpct
