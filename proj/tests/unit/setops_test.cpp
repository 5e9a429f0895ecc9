#include "mpct/setops.hpp"

#include <gtest/gtest.h>

#include "example1.hpp"
#include "mpct/design.hpp"
#include "mpct/sampling.hpp"

namespace mpct {
namespace {

using test::scalar;
using test::vec;

GTEST_TEST(MaxInvariantSetTest, NilpotentDynamicsKeepG) {
  const Polytope G = Polytope::box(vec({-1, -1}), vec({1, 1}));
  const auto rep = max_invariant_set(Matrix::Zero(2, 2), G);
  EXPECT_TRUE(rep.converged);
  for (const Vector& q : {vec({1, 0}), vec({0, -1}), vec({1, 1})})
    EXPECT_NEAR(rep.set.support(q), G.support(q), 1e-9);
}

GTEST_TEST(MaxInvariantSetTest, ScalarContraction) {
  // x+ = 0.5 x in |x| <= 1: the box itself is invariant.
  const Polytope G = Polytope::box(scalar(-1), scalar(1));
  const auto rep = max_invariant_set(Matrix::Constant(1, 1, 0.5), G);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.set.support(scalar(1)), 1.0, 1e-9);
  EXPECT_NEAR(rep.set.support(scalar(-1)), 1.0, 1e-9);
}

GTEST_TEST(MaxInvariantSetTest, CapReportsNotConverged) {
  Matrix A(2, 2);
  A << 0.999, 0.2, -0.2, 0.999;
  const Polytope G = Polytope::box(vec({-1, -10}), vec({1, 10}));
  try {
    max_invariant_set(A, G, {2, 1e-8});
    FAIL() << "expected NotConvergedError";
  } catch (const NotConvergedError& e) {
    EXPECT_FALSE(e.report().converged);
  }
}

GTEST_TEST(TrackingInvariantSetTest, OneStepInvarianceOnSamples) {
  const auto sys = test::example1_system();
  const auto d = test::example1_design();
  const Polytope Z = test::example1_constraints();
  const auto rep = invariant_set_for_tracking(sys, d.K, Z, 0.99);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(sampled_tracking_invariance(sys, d.K, Z, rep.set, 10000, 17), 1e-8);
}

GTEST_TEST(RpiTest, PointDisturbance) {
  const auto rep = rpi_outer_approx(Matrix::Constant(1, 1, 0.5), Zonotope::point(scalar(0)));
  EXPECT_NEAR(rep.set.support(scalar(1)), 0.0, 1e-12);
  EXPECT_NEAR(rep.set.support(scalar(-1)), 0.0, 1e-12);
}

GTEST_TEST(RpiTest, NilpotentReturnsW) {
  const Zonotope W = Zonotope::box(vec({-0.1, -0.2}), vec({0.1, 0.2}));
  const auto rep = rpi_outer_approx(Matrix::Zero(2, 2), W);
  EXPECT_EQ(rep.s, 1);
  for (const Vector& q : {vec({1, 0}), vec({0, 1}), vec({1, -1})}) EXPECT_NEAR(rep.set.support(q), W.support(q), 1e-12);
}

GTEST_TEST(RpiTest, ScalarExample) {
  // A_K = 0.5, W = [-1, 1]: s = 4 gives alpha = 1/16 and
  // (1 + 0.5 + 0.25 + 0.125) / (1 - 1/16) = 2.
  const auto rep = rpi_outer_approx(Matrix::Constant(1, 1, 0.5), Zonotope::box(scalar(-1), scalar(1)), 0.1);
  EXPECT_EQ(rep.s, 4);
  EXPECT_NEAR(rep.alpha, 1.0 / 16.0, 1e-12);
  EXPECT_NEAR(rep.set.support(scalar(1)), 2.0, 1e-12);
  EXPECT_NEAR(rep.set.support(scalar(-1)), 2.0, 1e-12);
}

GTEST_TEST(RpiTest, RobustInvarianceOnExtremePoints) {
  const auto sys = test::example1_system();
  const auto d = test::example1_design();
  const Matrix AK = sys.A() + sys.B() * d.K;
  const Zonotope W = Zonotope::box(vec({-0.05, -0.05}), vec({0.05, 0.05}));
  const auto rep = rpi_outer_approx(AK, W);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 2000; ++i) {
    const Vector e = rep.set.sample_extreme(rng);
    const Vector w = W.sample_extreme(rng);
    EXPECT_TRUE(rep.set.contains(AK * e + w, 1e-9));
  }
}

GTEST_TEST(RpiTest, RejectsUnstableDynamics) {
  EXPECT_THROW(rpi_outer_approx(Matrix::Constant(1, 1, 1.5), Zonotope::box(scalar(-1), scalar(1))), NotSchurError);
}

GTEST_TEST(TightenTest, ScalarBox) {
  // |x| <= 1 and |u| <= 1 with phi = [-0.2, 0.2], K = 0: only x shrinks.
  const Polytope Z = Polytope::box(vec({-1, -1}), vec({1, 1}));
  const Polytope Zbar = tighten(Z, Zonotope::box(scalar(-0.2), scalar(0.2)), Matrix::Zero(1, 1));
  EXPECT_NEAR(Zbar.support(vec({1, 0})), 0.8, 1e-12);
  EXPECT_NEAR(Zbar.support(vec({-1, 0})), 0.8, 1e-12);
  EXPECT_NEAR(Zbar.support(vec({0, 1})), 1.0, 1e-12);
  // With K = 1 the input also loses 0.2.
  const Polytope Zk = tighten(Z, Zonotope::box(scalar(-0.2), scalar(0.2)), Matrix::Ones(1, 1));
  EXPECT_NEAR(Zk.support(vec({0, 1})), 0.8, 1e-12);
}

GTEST_TEST(TightenTest, ContainmentProperty) {
  // zbar in Zbar and e in phi imply (x + e, u + K e) in Z.
  const auto sys = test::example1_system();
  const auto d = test::example1_design();
  const Polytope Z = test::example1_constraints();
  const auto phi = rpi_outer_approx(sys.A() + sys.B() * d.K, Zonotope::box(vec({-0.05, -0.05}), vec({0.05, 0.05})));
  const Polytope Zbar = tighten(Z, phi.set, d.K);
  std::mt19937_64 rng(29);
  const auto samples = hit_and_run(Zbar, 300, 31);
  for (const Vector& zb : samples) {
    const Vector e = phi.set.sample_extreme(rng);
    Vector z = zb;
    z.head(2) += e;
    z.tail(1) += d.K * e;
    EXPECT_TRUE(Z.contains(z, 1e-9));
  }
}

GTEST_TEST(TightenTest, EmptyResultThrows) {
  const Polytope Z = Polytope::box(vec({-1, -1}), vec({1, 1}));
  EXPECT_THROW(tighten(Z, Zonotope::box(scalar(-2), scalar(2)), Matrix::Zero(1, 1)), EmptyTightenedError);
}

}  // namespace
}  // namespace mpct
