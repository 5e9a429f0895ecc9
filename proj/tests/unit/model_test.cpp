#include "mpct/model.hpp"

#include <gtest/gtest.h>

#include "example1.hpp"
#include "mpct/sampling.hpp"

namespace mpct {
namespace {

using test::example1_constraints;
using test::example1_system;
using test::scalar;
using test::vec;

GTEST_TEST(LinearSystemTest, RejectsBadInput) {
  Matrix A = Matrix::Identity(2, 2);
  Matrix B(2, 1);
  B << 0, 1;
  // (I, e2) leaves x1 uncontrollable.
  EXPECT_THROW(LinearSystem(A, B, Matrix::Identity(2, 2), Matrix::Zero(2, 1)), std::invalid_argument);
  EXPECT_THROW(LinearSystem(A, Matrix::Zero(3, 1), Matrix::Identity(2, 2), Matrix::Zero(2, 1)),
               std::invalid_argument);
  Matrix Abad = test::example1_system().A();
  Abad(0, 0) = std::nan("");
  EXPECT_THROW(LinearSystem(Abad, example1_system().B(), example1_system().C(), example1_system().D()),
               std::invalid_argument);
}

GTEST_TEST(LinearSystemTest, ControllabilityIndex) {
  EXPECT_EQ(example1_system().controllability_index(), 2);
  Matrix A = Matrix::Zero(3, 3);
  A(1, 0) = 1;
  A(2, 1) = 1;
  Matrix B = Matrix::Zero(3, 1);
  B(0) = 1;
  EXPECT_EQ(controllability_index(A, B), 3);
  EXPECT_EQ(controllability_index(Matrix::Identity(2, 2), vec({0, 1})), -1);
}

GTEST_TEST(SteadyStateTest, Example1Manifold) {
  const auto sys = example1_system();
  const Polytope Zs = steady_state_manifold(sys, example1_constraints(), 0.99);
  EXPECT_TRUE(Zs.contains(vec({9.9, 0, 0})));
  EXPECT_TRUE(Zs.contains(vec({-9.9, 0, 0})));
  EXPECT_FALSE(Zs.contains(vec({10.0, 0, 0})));
  EXPECT_FALSE(Zs.contains(vec({1.0, 0.1, 0})));
  EXPECT_NEAR(Zs.support(vec({1, 0, 0})), 9.9, 1e-9);
  EXPECT_NEAR(Zs.support(vec({0, 1, 0})), 0.0, 1e-9);
  EXPECT_NEAR(Zs.support(vec({0, 0, 1})), 0.0, 1e-9);

  const OutputSet Ys = output_set(sys, Zs);
  ASSERT_TRUE(Ys.is_exact());
  EXPECT_NEAR(Ys.support(scalar(1)), 9.9, 1e-9);
  EXPECT_NEAR(Ys.support(scalar(-1)), 9.9, 1e-9);
  EXPECT_TRUE(Ys.contains(scalar(5)));
  EXPECT_FALSE(Ys.contains(scalar(12)));
}

GTEST_TEST(SteadyStateTest, ZeroSigmaLeavesOrigin) {
  const Polytope Zs = steady_state_manifold(example1_system(), example1_constraints(), 0.0);
  for (const Vector& q : {vec({1, 0, 0}), vec({-1, 0, 0}), vec({0, 1, 1}), vec({1, -1, 1})})
    EXPECT_NEAR(Zs.support(q), 0.0, 1e-9);
}

GTEST_TEST(SteadyStateTest, EmptyIntersectionThrows) {
  // Steady states have x2 = 0, which this Z excludes.
  const Polytope Z = Polytope::box(vec({-10, 1, -0.5}), vec({10, 2, 0.5}));
  EXPECT_THROW(steady_state_manifold(example1_system(), Z, 0.99), EmptySetError);
}

GTEST_TEST(SteadyStateTest, RandomSystemsSatisfyDynamics) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = 2 + trial % 3, nu = 1 + trial % 2;
    const Matrix A = 0.6 * test::random_matrix(nx, nx, rng);
    const Matrix B = test::random_matrix(nx, nu, rng);
    if (controllability_index(A, B) < 0) continue;
    const LinearSystem sys(A, B, test::random_matrix(1, nx, rng), Matrix::Zero(1, nu));
    const Polytope Z = Polytope::box(Vector::Constant(nx + nu, -1), Vector::Constant(nx + nu, 1));
    const Polytope Zs = steady_state_manifold(sys, Z, 0.9);
    Matrix M(nx, nx + nu);
    M << A - Matrix::Identity(nx, nx), B;
    for (const Vector& z : hit_and_run(Zs, 50, trial)) {
      EXPECT_LE(test::inf_norm(Vector(M * z)), 1e-9);
      EXPECT_LE(z.cwiseAbs().maxCoeff(), 0.9 + 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

GTEST_TEST(PolytopeTest, BoxSupportAndMembership) {
  const Polytope P = Polytope::box(vec({-1, -2}), vec({3, 4}));
  EXPECT_NEAR(P.support(vec({1, 1})), 7.0, 1e-9);
  EXPECT_NEAR(P.support(vec({-1, 0})), 1.0, 1e-9);
  EXPECT_TRUE(P.contains(vec({3, 4})));
  EXPECT_FALSE(P.contains(vec({3.1, 0})));
  EXPECT_NEAR(P.violation(vec({3.5, 0})), 0.5, 1e-12);
  EXPECT_TRUE(P.has_interior());
  EXPECT_NEAR(P.chebyshev_ball().radius, 2.0, 1e-9);
  EXPECT_EQ(Polytope::universe(2).support(vec({1, 0})), std::numeric_limits<double>::infinity());
}

GTEST_TEST(PolytopeTest, EmptyAndRedundant) {
  Matrix F(2, 1);
  F << 1, -1;
  const Polytope empty(F, vec({-1, -1}));
  EXPECT_TRUE(empty.is_empty());
  EXPECT_THROW(empty.support(scalar(1)), EmptySetError);

  Matrix F3(3, 1);
  F3 << 1, 1, -1;
  int removed = 0;
  const Polytope reduced = Polytope(F3, vec({1, 2, 1})).remove_redundant(1e-8, &removed);
  EXPECT_EQ(removed, 1);
  EXPECT_EQ(reduced.num_ineq(), 2);
}

GTEST_TEST(PolytopeTest, PreimageAndScaling) {
  const Polytope P = Polytope::box(vec({-1, -1}), vec({1, 1}));
  Matrix M(2, 2);
  M << 2, 0, 0, 1;
  const Polytope pre = P.preimage(M, vec({0, 0}));
  EXPECT_NEAR(pre.support(vec({1, 0})), 0.5, 1e-9);
  EXPECT_NEAR(P.scaled(3).support(vec({0, 1})), 3.0, 1e-9);
}

GTEST_TEST(ZonotopeTest, SupportIsSubadditiveAndHomogeneous) {
  std::mt19937_64 rng(3);
  const Zonotope Zn(test::random_vector(3, rng), test::random_matrix(3, 5, rng));
  for (int i = 0; i < 200; ++i) {
    const Vector p = test::random_vector(3, rng), q = test::random_vector(3, rng);
    const double s = std::abs(test::random_vector(1, rng)(0)) + 0.1;
    const Vector c = Zn.center();
    const Zonotope centered(Vector::Zero(3), Zn.generators());
    EXPECT_LE(centered.support(p + q), centered.support(p) + centered.support(q) + 1e-12);
    EXPECT_NEAR(Zn.support(s * p) - s * c.dot(p), s * centered.support(p), 1e-9);
  }
}

GTEST_TEST(ZonotopeTest, PolytopeConversionAgrees) {
  std::mt19937_64 rng(5);
  const Zonotope Zn(test::random_vector(2, rng), test::random_matrix(2, 4, rng));
  const Polytope P = Zn.to_polytope();
  for (int i = 0; i < 50; ++i) {
    const Vector q = test::random_vector(2, rng);
    EXPECT_NEAR(P.support(q), Zn.support(q), 1e-8);
    const Vector s = Zn.sample(rng);
    EXPECT_TRUE(Zn.contains(s, 1e-8));
    EXPECT_TRUE(P.contains(s, 1e-8));
  }
  EXPECT_FALSE(Zn.contains(Zn.center() + 100.0 * Vector::Ones(2)));
}

GTEST_TEST(ZonotopeTest, BoxAndMaps) {
  const Zonotope box = Zonotope::box(vec({-1, 0}), vec({1, 2}));
  EXPECT_NEAR(box.support(vec({1, 1})), 3.0, 1e-12);
  EXPECT_TRUE(Zonotope::point(vec({1, 2})).is_point());
  Matrix M(1, 2);
  M << 1, 1;
  EXPECT_NEAR(box.linear_map(M).support(scalar(-1)), 1.0, 1e-12);
  EXPECT_NEAR(box.minkowski_sum(box).support(vec({1, 0})), 2.0, 1e-12);
  EXPECT_NEAR(box.scaled(0.5).support(vec({0, 1})), 1.0, 1e-12);
}

GTEST_TEST(ReferenceScheduleTest, PiecewiseAndPeriodic) {
  const auto pw = ReferenceSchedule::piecewise({0, 10, 20}, {scalar(1), scalar(2), scalar(3)});
  EXPECT_EQ(pw.at(0)(0), 1);
  EXPECT_EQ(pw.at(9)(0), 1);
  EXPECT_EQ(pw.at(10)(0), 2);
  EXPECT_EQ(pw.at(500)(0), 3);
  EXPECT_FALSE(pw.is_periodic());

  const auto per = ReferenceSchedule::periodic({scalar(0), scalar(1), scalar(2)});
  EXPECT_EQ(per.period(), 3);
  EXPECT_EQ(per.at(4)(0), 1);
  const auto w = per.window(2, 3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0](0), 2);
  EXPECT_EQ(w[1](0), 0);
  EXPECT_EQ(w[2](0), 1);

  EXPECT_THROW(ReferenceSchedule::piecewise({5, 1}, {scalar(1), scalar(2)}), std::invalid_argument);
  EXPECT_THROW(ReferenceSchedule::periodic({}), std::invalid_argument);
}

GTEST_TEST(NullSpaceTest, Orthonormal) {
  Matrix M(1, 3);
  M << 1, 1, 0;
  const Matrix N = null_space(M);
  ASSERT_EQ(N.cols(), 2);
  EXPECT_LE(test::inf_norm(Matrix(M * N)), 1e-12);
  EXPECT_LE(test::inf_norm(Matrix(N.transpose() * N - Matrix::Identity(2, 2))), 1e-12);
}

}  // namespace
}  // namespace mpct
