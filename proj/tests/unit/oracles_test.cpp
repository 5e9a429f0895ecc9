#include "mpct/oracles.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "example1.hpp"
#include "mpct/solver.hpp"

namespace mpct {
namespace {

using test::example1_constraints;
using test::example1_system;
using test::scalar;
using test::vec;

constexpr double kSigma = 0.99;

GTEST_TEST(SteadyStateForRefTest, Example1) {
  const auto ss = steady_state_for_ref(example1_system(), example1_constraints(), kSigma, scalar(5));
  EXPECT_NEAR(ss.x(0), 5.0, 1e-9);
  EXPECT_NEAR(ss.x(1), 0.0, 1e-9);
  EXPECT_NEAR(ss.u(0), 0.0, 1e-9);
  EXPECT_THROW(steady_state_for_ref(example1_system(), example1_constraints(), kSigma, scalar(11)),
               UnreachableReferenceError);
  EXPECT_NO_THROW(steady_state_for_ref(example1_system(), example1_constraints(), kSigma, scalar(9.9)));
}

GTEST_TEST(SteadyStateTargetTest, IgnoresConstraints) {
  const auto t = steady_state_target(example1_system(), scalar(42));
  EXPECT_NEAR(t.x(0), 42.0, 1e-9);
  EXPECT_NEAR(t.x(1), 0.0, 1e-9);
  EXPECT_NEAR(t.u(0), 0.0, 1e-9);
}

GTEST_TEST(OptimalReachableReferenceTest, ClipsOntoOutputSet) {
  const auto sys = example1_system();
  const Polytope Z = example1_constraints();
  const Matrix S = Matrix::Identity(1, 1);
  // Y_s = [-9.9, 9.9], so the oracle is a clip.
  for (double yr : {-30.0, -9.9, -3.0, 0.0, 5.0, 9.9, 12.0}) {
    const double expected = std::clamp(yr, -9.9, 9.9);
    // On the boundary the bound is active with a zero multiplier, so the
    // interior-point iterate approaches it only like sqrt(gap).
    const double tol = std::abs(std::abs(yr) - 9.9) < 1e-12 ? 1e-5 : 1e-9;
    EXPECT_NEAR(optimal_reachable_reference(sys, Z, kSigma, scalar(yr), S).ya(0), expected, tol) << yr;
    EXPECT_NEAR(optimal_reachable_reference(sys, Z, kSigma, scalar(yr), S, OffsetKind::Norm).ya(0), expected, 1e-7)
        << yr;
  }
  const auto r = optimal_reachable_reference(sys, Z, kSigma, scalar(12), S);
  EXPECT_NEAR(r.offset, 2.1 * 2.1, 1e-8);
  EXPECT_NEAR(r.steady.x(0), 9.9, 1e-9);
}

GTEST_TEST(ClosestSteadyStateTest, Example1) {
  const auto sys = example1_system();
  const Polytope Z = example1_constraints();
  const auto ss =
      closest_steady_state(sys, Z, kSigma, vec({12, 3}), scalar(1), Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  EXPECT_NEAR(ss.x(0), 9.9, 1e-8);
  EXPECT_NEAR(ss.x(1), 0.0, 1e-8);
  EXPECT_NEAR(ss.u(0), 0.0, 1e-8);
}

GTEST_TEST(EconomicSetpointTest, IdentityCostProjectsOrigin) {
  EconomicCost c{Matrix::Identity(3, 3), Vector::Zero(3), Matrix::Zero(3, 0), 0.0};
  const auto sp = economic_setpoint(example1_system(), example1_constraints(), kSigma, c, Vector());
  EXPECT_LE(sp.x.norm() + sp.u.norm(), 1e-8);
}

GTEST_TEST(EconomicSetpointTest, MatchesClosedFormOverSteadyStates) {
  // Steady states are (s, 0, 0) with |s| <= 9.9; cost s^2 + (c0 + theta) s.
  EconomicCost c{Matrix::Identity(3, 3), vec({-14, 0, 0}), Matrix::Zero(3, 1), 49.0};
  c.G(0, 0) = 1.0;
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> th(-30, 30);
  for (int i = 0; i < 20; ++i) {
    const double theta = th(rng);
    const auto sp = economic_setpoint(example1_system(), example1_constraints(), kSigma, c, scalar(theta));
    const double expected = std::clamp(-(-14.0 + theta) / 2.0, -9.9, 9.9);
    EXPECT_NEAR(sp.x(0), expected, 1e-8) << theta;
    EXPECT_NEAR(sp.x(1), 0.0, 1e-8);
  }
  const auto sp = economic_setpoint(example1_system(), example1_constraints(), kSigma, c, scalar(0));
  EXPECT_NEAR(sp.x(0), 7.0, 1e-9);
}

// Periodic reference problem in condensed variables (x0, u_0..u_{tau-1}),
// solved by ADMM as an independent check of the oracle.
std::vector<Vector> condensed_periodic_ya(const LinearSystem& sys, const Polytope& Z, int tau,
                                          const std::vector<Vector>& yr) {
  const int nx = sys.nx(), nu = sys.nu(), n = nx + tau * nu;
  std::vector<Matrix> X(tau + 1), U(tau);
  X[0] = Matrix::Zero(nx, n);
  X[0].leftCols(nx).setIdentity();
  for (int k = 0; k < tau; ++k) {
    U[k] = Matrix::Zero(nu, n);
    U[k].block(0, nx + k * nu, nu, nu).setIdentity();
    X[k + 1] = sys.A() * X[k] + sys.B() * U[k];
  }
  ProgramBuilder b(n);
  const Matrix Fx = Z.F().leftCols(nx), Fu = Z.F().rightCols(nu);
  for (int k = 0; k < tau; ++k) {
    b.add_square({{0, sys.C() * X[k] + sys.D() * U[k]}}, -yr[k], Matrix::Identity(sys.ny(), sys.ny()));
    b.add_inequality({{0, Fx * X[k] + Fu * U[k]}}, kSigma * Z.g());
  }
  b.add_equality({{0, X[tau] - X[0]}}, Vector::Zero(nx));
  VarLayout layout;
  layout.add("v", 0, n);
  const auto prog = b.build(ProgramKind::QP, std::move(layout), {}, "condensed");
  SolverSettings s;
  s.eps_abs = s.eps_rel = 1e-11;
  s.max_iter = 200000;
  s.adaptive_rho = true;
  const auto r = AdmmSolver(s).solve(prog);
  EXPECT_EQ(r.status, SolveStatus::Solved);
  std::vector<Vector> ya;
  for (int k = 0; k < tau; ++k) ya.push_back(sys.C() * X[k] * r.z + sys.D() * U[k] * r.z);
  return ya;
}

GTEST_TEST(OptimalPeriodicReferenceTest, ConstantReachableIsItself) {
  const std::vector<Vector> yr(6, scalar(4));
  const auto r = optimal_periodic_reference(example1_system(), example1_constraints(), kSigma, 6, yr,
                                            Matrix::Identity(1, 1));
  for (const auto& y : r.ya) EXPECT_NEAR(y(0), 4.0, 1e-8);
  EXPECT_NEAR(r.offset, 0.0, 1e-12);
  EXPECT_LE((r.xa.front() - r.xa.back()).norm(), 1e-9);
}

GTEST_TEST(OptimalPeriodicReferenceTest, PeriodOneMatchesReachableReference) {
  for (double yr : {-15.0, 3.0, 12.0}) {
    const auto p = optimal_periodic_reference(example1_system(), example1_constraints(), kSigma, 1, {scalar(yr)},
                                              Matrix::Identity(1, 1));
    const auto s =
        optimal_reachable_reference(example1_system(), example1_constraints(), kSigma, scalar(yr), Matrix::Identity(1, 1));
    EXPECT_NEAR(p.ya[0](0), s.ya(0), 1e-8);
  }
}

GTEST_TEST(OptimalPeriodicReferenceTest, UnreachableMatchesCondensedSolve) {
  const auto sys = example1_system();
  const Polytope Z = example1_constraints();
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> amp(8, 20);
  for (int trial = 0; trial < 3; ++trial) {
    const int tau = 8 + 4 * trial;
    std::vector<Vector> yr;
    const double a = amp(rng);
    for (int k = 0; k < tau; ++k) yr.push_back(scalar(a * std::sin(2 * M_PI * k / tau) + 2.0 * std::cos(4 * M_PI * k / tau)));
    const auto oracle = optimal_periodic_reference(sys, Z, kSigma, tau, yr, Matrix::Identity(1, 1));
    const auto check = condensed_periodic_ya(sys, Z, tau, yr);
    for (int k = 0; k < tau; ++k) EXPECT_NEAR(oracle.ya[k](0), check[k](0), 1e-5) << "tau " << tau << " k " << k;
    // Admissibility of the oracle trajectory.
    for (int k = 0; k < tau; ++k) {
      Vector z(3);
      z << oracle.xa[k], oracle.ua[k];
      EXPECT_LE(Z.scaled(kSigma).violation(z), 1e-8);
      EXPECT_LE((oracle.xa[k + 1] - sys.step(oracle.xa[k], oracle.ua[k])).norm(), 1e-8);
    }
  }
}

}  // namespace
}  // namespace mpct
