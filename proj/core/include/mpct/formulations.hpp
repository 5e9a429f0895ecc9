#pragma once

#include <string>
#include <vector>

#include "mpct/design.hpp"
#include "mpct/program.hpp"
#include "mpct/setops.hpp"

namespace mpct {

/// Convex quadratic economic cost over z = (x, u):
///   l(z, theta) = z' H z + (c + G theta)' z + d.
struct EconomicCost {
  Matrix H;
  Vector c;
  Matrix G;
  double d = 0.0;

  Vector linear(const Vector& theta) const;
  double value(const Vector& x, const Vector& u, const Vector& theta) const;
};

/// Output-type constraints low <= Cz x + Dz u <= high used by the harmonic
/// controller. Infinite entries mark one-sided rows.
struct OutputBounds {
  Matrix Cz, Dz;
  Vector low, high;
  int rows() const { return static_cast<int>(low.size()); }
};

/// Pairs opposite rows of Z into two-sided bounds; unpaired rows become
/// one-sided. Equality rows become two-sided bounds with low = high.
OutputBounds output_bounds_from_polytope(const Polytope& Z, int nx);

/// Standard MPC regulating to the steady state (xr, ur) with terminal cost
/// ||x_N - xr||_P^2 and terminal set Xf (over x).
///
/// Layout: x_0, u_0, ..., x_{N-1}, u_{N-1}, x_N.
StructuredProgram build_stan_mpc(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Polytope& Xf, const Vector& x_now, const Vector& xr, const Vector& ur);

/// Tracking MPC with an artificial steady state (xa, ua), the terminal set for
/// tracking Xt over (x_N, xa, ua) and the offset ||C xa + D ua - yr||_S^2.
///
/// Layout: stages, x_N, then xa and ua at the tail. The reference only enters
/// q and c. Equality rows of Xt are skipped since the steady-state rows
/// already impose them.
StructuredProgram build_lin_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Polytope& Xt, const Vector& x_now, const Vector& yr);

/// Terminal-equality variant with offset ||xa - xr||_T^2 + ||ua - ur||_Su^2.
StructuredProgram build_equ_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Vector& x_now, const Vector& xr, const Vector& ur);

/// Terminal-equality variant with the output offset ||C xa + D ua - yr||_S^2.
StructuredProgram build_equ_mpct_output(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                        const Vector& x_now, const Vector& yr);

/// Tube-based robust variant. x_0 is free with x_now - x_0 in phi, encoded
/// by coefficients lambda in [-1, 1]^p on the generators of phi; stage and
/// reference constraints use Zbar and the terminal set is Xt_bar.
///
/// Layout: lambda, stages, x_N, xa, ua.
StructuredProgram build_robust_mpct(const LinearSystem& sys, const TrackingDesign& design, const Zonotope& phi,
                                    const Polytope& Zbar, const Polytope& Xt_bar, const Vector& x_now,
                                    const Vector& yr);

/// Periodic artificial reference (xa_0..xa_tau, ua_0..ua_{tau-1}) with
/// xa_0 = xa_tau, terminal constraint x_N = xa_N and offset
/// sum_k ||C xa_k + D ua_k - yr_k||_S^2 over the window yr_window (tau
/// samples starting at the current time). Requires N <= tau.
StructuredProgram build_periodic_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                      int tau, const Vector& x_now, const std::vector<Vector>& yr_window);

/// Harmonic artificial reference xe + xs sin(w k) + xc cos(w k) (and the
/// same for u). Bounds hold on every prediction stage; the reference is kept
/// admissible by one second-order cone per finite bound.
///
/// Layout: stages, x_N, then xe, xs, xc, ue, us, uc.
StructuredProgram build_hmpc(const LinearSystem& sys, const TrackingDesign& design, const OutputBounds& bounds,
                             const Vector& x_now, const Vector& xr, const Vector& ur);

/// Economic tracking MPC with stage cost l(x_k - xa + x*, u_k - ua + u*) and
/// offset gamma ||xa - x*|| + ||xa - x*||_T^2 + ||ua - u*||_Su^2; the norm
/// is carried by an epigraph variable eta and one cone. Constraints are the
/// terminal-equality ones.
///
/// Layout: stages, x_N, xa, ua, eta.
StructuredProgram build_econ_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                  const EconomicCost& cost, const Vector& theta, const Vector& x_star,
                                  const Vector& u_star, const Vector& x_now);

/// Harmonic reference value at stage k from the parameter blocks of an HMPC
/// solution.
struct HarmonicParameters {
  Vector xe, xs, xc, ue, us, uc;
  Vector x_at(double omega, int k) const;
  Vector u_at(double omega, int k) const;
};
HarmonicParameters harmonic_parameters(const StructuredProgram& prog, const Vector& z);

}  // namespace mpct
