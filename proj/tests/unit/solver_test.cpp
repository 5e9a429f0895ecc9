#include "mpct/solver.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "example1.hpp"
#include "mpct/banded.hpp"
#include "mpct/formulations.hpp"
#include "mpct/oracles.hpp"
#include "random_qp.hpp"

namespace mpct {
namespace {

using test::example1_constraints;
using test::example1_design;
using test::example1_system;
using test::inf_norm;
using test::scalar;
using test::vec;

GTEST_TEST(ProjectSocTest, Examples) {
  auto [s1, t1] = project_soc(vec({3, 4}), 10);
  EXPECT_EQ(s1, vec({3, 4}));
  EXPECT_EQ(t1, 10);
  auto [s2, t2] = project_soc(vec({3, 4}), -10);
  EXPECT_EQ(s2, vec({0, 0}));
  EXPECT_EQ(t2, 0);
  auto [s3, t3] = project_soc(vec({3, 4}), 0);
  EXPECT_NEAR(s3(0), 1.5, 1e-15);
  EXPECT_NEAR(s3(1), 2.0, 1e-15);
  EXPECT_NEAR(t3, 2.5, 1e-15);
}

GTEST_TEST(ProjectSocTest, IdempotentAndNonExpansive) {
  std::mt19937_64 rng(79);
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 5;
    const Vector a = 3.0 * test::random_vector(n, rng), b = 3.0 * test::random_vector(n, rng);
    const double ta = 3.0 * test::random_vector(1, rng)(0), tb = 3.0 * test::random_vector(1, rng)(0);
    const auto [pa, qa] = project_soc(a, ta);
    const auto [pb, qb] = project_soc(b, tb);
    EXPECT_LE(pa.norm(), qa + 1e-12);
    const auto [ppa, pqa] = project_soc(pa, qa);
    EXPECT_LE(inf_norm(Vector(ppa - pa)), 1e-12);
    EXPECT_NEAR(pqa, qa, 1e-12);
    const double before = std::sqrt((a - b).squaredNorm() + (ta - tb) * (ta - tb));
    const double after = std::sqrt((pa - pb).squaredNorm() + (qa - qb) * (qa - qb));
    EXPECT_LE(after, before + 1e-12);
  }
}

SparseMatrix random_banded_spd(int n, int bw, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix M = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - bw); j < i; ++j) M(i, j) = M(j, i) = nd(rng);
  for (int i = 0; i < n; ++i) M(i, i) = M.row(i).cwiseAbs().sum() + 1.0;
  return to_sparse(M);
}

GTEST_TEST(WoodburyTest, HandExample) {
  const auto f = BandedFactor::factorize(Matrix(Matrix::Identity(2, 2)));
  const Vector e1 = vec({1, 0});
  const Vector x = semibanded_solve(f, e1, e1, vec({4, 3}));
  EXPECT_NEAR(x(0), 2.0, 1e-15);
  EXPECT_NEAR(x(1), 3.0, 1e-15);
}

GTEST_TEST(WoodburyTest, ZeroUpdateIsBandedSolve) {
  std::mt19937_64 rng(83);
  const SparseMatrix M = random_banded_spd(40, 3, rng);
  const auto f = BandedFactor::factorize(M);
  const Vector b = test::random_vector(40, rng);
  const Vector x = semibanded_solve(f, Matrix::Zero(40, 2), Matrix::Zero(40, 2), b);
  EXPECT_LE(inf_norm(Vector(x - f.solve(b))), 1e-14);
  EXPECT_LE(inf_norm(Vector(Matrix(M) * x - b)) / inf_norm(b), 1e-12);
}

GTEST_TEST(WoodburyTest, RandomResidual) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 50 + 10 * trial, r = 1 + trial % 20, bw = 1 + trial % 6;
    const SparseMatrix M = random_banded_spd(n, bw, rng);
    const Matrix U = 0.3 * test::random_matrix(n, r, rng), V = 0.3 * test::random_matrix(n, r, rng);
    const Vector b = test::random_vector(n, rng);
    const auto f = BandedFactor::factorize(M);
    EXPECT_LE(f.bandwidth(), bw);
    const SemibandedSolver solver(f, U, V);
    const Vector x = solver.solve(b);
    const Vector res = Matrix(M) * x + U * (V.transpose() * x) - b;
    EXPECT_LE(inf_norm(res) / inf_norm(b), 1e-9) << "trial " << trial;
    EXPECT_LE(inf_norm(Vector(semibanded_solve(f, U, V, b) - x)), 1e-9);
  }
}

GTEST_TEST(WoodburyTest, EquMpctHessian) {
  const auto prog =
      build_equ_mpct(example1_system(), example1_constraints(), example1_design(30), vec({-5, 1}), vec({5, 0}), scalar(0));
  ASSERT_TRUE(prog.structure.has_value());
  const auto& s = *prog.structure;
  const int n = prog.dim();
  SparseMatrix I(n, n);
  I.setIdentity();
  const SparseMatrix M = 2.0 * s.HB + I;
  const auto f = BandedFactor::factorize(M);
  std::mt19937_64 rng(97);
  const Vector b = test::random_vector(n, rng);
  const Vector x = semibanded_solve(f, 2.0 * s.U, s.V, b);
  const Matrix full = Matrix(2.0 * prog.H + I);
  EXPECT_LE(inf_norm(Vector(full * x - b)) / inf_norm(b), 1e-9);
  EXPECT_LE(inf_norm(Vector(x - full.ldlt().solve(b))), 1e-9);
}

GTEST_TEST(BandedFactorTest, RejectsIndefinite) {
  Matrix M = Matrix::Identity(3, 3);
  M(1, 1) = -1;
  EXPECT_THROW(BandedFactor::factorize(M), std::runtime_error);
}

GTEST_TEST(AdmmTest, ProjectionOntoOrthant) {
  StructuredProgram p;
  p.H = to_sparse(Matrix(Matrix::Identity(3, 3)));
  p.q = Vector::Zero(3);
  p.Aeq = SparseMatrix(0, 3);
  p.beq = Vector(0);
  p.F = to_sparse(Matrix(-Matrix::Identity(3, 3)));
  p.g = -Vector::Ones(3);
  p.layout.add("z", 0, 3);
  const auto r = admm_qp(p);
  ASSERT_EQ(r.status, SolveStatus::Solved);
  EXPECT_LE(inf_norm(Vector(r.z - Vector::Ones(3))), 1e-8);
  EXPECT_NEAR(r.objective, 3.0, 1e-7);
}

GTEST_TEST(AdmmTest, RandomQpsMatchReference) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + (trial * 37) % 120;
    const auto p = test::random_qp(n, rng);
    const auto ref = dense_reference_solve(p);
    const auto r = admm_qp(p);
    ASSERT_EQ(ref.status, SolveStatus::Solved);
    ASSERT_EQ(r.status, SolveStatus::Solved) << "n " << n;
    EXPECT_LE(std::abs(r.objective - ref.objective) / std::max(1.0, std::abs(ref.objective)), 1e-5);
    EXPECT_LE(inf_norm(Vector(r.z - ref.z)), 1e-4);
  }
}

GTEST_TEST(AdmmTest, DetectsPrimalInfeasibility) {
  StructuredProgram p;
  p.H = to_sparse(Matrix(Matrix::Identity(2, 2)));
  p.q = Vector::Zero(2);
  p.Aeq = SparseMatrix(0, 2);
  p.beq = Vector(0);
  Matrix F(2, 2);
  F << 1, 0, -1, 0;
  p.F = to_sparse(F);
  p.g = vec({-1, -1});
  p.layout.add("z", 0, 2);
  EXPECT_EQ(admm_qp(p).status, SolveStatus::PrimalInfeasible);
}

GTEST_TEST(AdmmTest, DeterministicIterates) {
  const auto prog =
      build_equ_mpct(example1_system(), example1_constraints(), example1_design(), vec({-5, 1}), vec({5, 0}), scalar(0));
  SolverSettings s;
  s.record_history = true;
  const auto a = AdmmSolver(s).solve(prog);
  const auto b = AdmmSolver(s).solve(prog);
  ASSERT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE(a.z == b.z);
  EXPECT_TRUE(a.y == b.y);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].primal_residual, b.history[i].primal_residual);
    EXPECT_EQ(a.history[i].dual_residual, b.history[i].dual_residual);
  }
}

GTEST_TEST(AdmmTest, ResidualShrinksAcrossRun) {
  const auto prog =
      build_lin_mpct(example1_system(), example1_constraints(), example1_design(),
                     invariant_set_for_tracking(example1_system(), example1_design().K, example1_constraints(), 0.99).set,
                     vec({-5, 1}), scalar(5));
  SolverSettings s;
  s.record_history = true;
  s.check_interval = 1;
  s.polish = false;
  const auto r = AdmmSolver(s).solve(prog);
  ASSERT_EQ(r.status, SolveStatus::Solved);
  // Best combined residual seen in each window of 50 iterations.
  std::vector<double> best;
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const double v = std::max(r.history[i].primal_residual, r.history[i].dual_residual);
    if (i % 50 == 0) best.push_back(v);
    best.back() = std::min(best.back(), v);
  }
  ASSERT_GE(best.size(), 2u);
  EXPECT_LE(best.back(), 1e-3 * best.front());
  for (std::size_t w = 1; w < best.size(); ++w) EXPECT_LE(best[w], 10.0 * best.front()) << "window " << w;
}

GTEST_TEST(AdmmTest, WarmStartReusesFactorization) {
  const auto sys = example1_system();
  const auto d = example1_design();
  AdmmSolver solver;
  const auto a = build_equ_mpct(sys, example1_constraints(), d, vec({-5, 1}), vec({5, 0}), scalar(0));
  const auto b = build_equ_mpct(sys, example1_constraints(), d, vec({-4, 1}), vec({5, 0}), scalar(0));
  const auto ra = solver.solve(a);
  WarmStart ws{ra.z, ra.y};
  const auto rb = solver.solve(b, &ws);
  EXPECT_EQ(rb.status, SolveStatus::Solved);
  EXPECT_EQ(solver.factorizations(), 1);
  EXPECT_LE(rb.iterations, ra.iterations);
}

std::vector<StructuredProgram> builder_outputs() {
  const auto sys = example1_system();
  const Polytope Z = example1_constraints();
  auto d = example1_design();
  const Polytope Xt = invariant_set_for_tracking(sys, d.K, Z, d.sigma).set;
  std::vector<StructuredProgram> out;
  out.push_back(build_lin_mpct(sys, Z, d, Xt, vec({-5, 1}), scalar(12)));
  out.push_back(build_equ_mpct(sys, Z, d, vec({-5, 1}), vec({5, 0}), scalar(0)));
  const Zonotope W = Zonotope::box(vec({-0.05, -0.05}), vec({0.05, 0.05}));
  const auto phi = rpi_outer_approx(sys.A() + sys.B() * d.K, W);
  const Polytope Zbar = tighten(Z, phi.set, d.K);
  out.push_back(build_robust_mpct(sys, d, phi.set, Zbar, invariant_set_for_tracking(sys, d.K, Zbar, d.sigma).set,
                                  vec({-5, 1}), scalar(3)));
  d.omega = 0.3;
  out.push_back(build_hmpc(sys, d, output_bounds_from_polytope(Z, 2), vec({-5, 1}), vec({5, 0}), scalar(0)));
  d.gamma = 10;
  EconomicCost c{Matrix::Identity(3, 3), vec({-14, 0, 0}), Matrix::Zero(3, 0), 49};
  out.push_back(build_econ_mpct(sys, Z, d, c, Vector(), vec({7, 0}), scalar(0), vec({-5, 1})));
  return out;
}

GTEST_TEST(AdmmTest, BackendsAgreeOnBuilderOutputs) {
  for (const auto& prog : builder_outputs()) {
    SCOPED_TRACE(prog.tag);
    // Some Hessians are singular, so the IPM is compared by objective only.
    const auto ipm = dense_reference_solve(prog);
    ASSERT_EQ(ipm.status, SolveStatus::Solved);
    SolverSettings s;
    s.eps_abs = s.eps_rel = 1e-10;
    s.adaptive_rho = true;
    s.max_iter = 100000;
    s.backend = LinearBackend::Structured;
    const auto ref = AdmmSolver(s).solve(prog);
    ASSERT_EQ(ref.status, SolveStatus::Solved);
    EXPECT_NEAR(ref.objective, ipm.objective, 1e-7 * std::max(1.0, std::abs(ipm.objective)));
    for (auto backend : {LinearBackend::Sparse, LinearBackend::Dense}) {
      s.backend = backend;
      const auto r = AdmmSolver(s).solve(prog);
      EXPECT_EQ(r.status, SolveStatus::Solved) << to_string(backend);
      EXPECT_LE(inf_norm(Vector(r.z - ref.z)), 1e-5) << to_string(backend);
    }
    const auto e = admm_qp_extended(prog, s);
    EXPECT_EQ(e.status, SolveStatus::Solved);
    EXPECT_LE(inf_norm(Vector(e.z - ref.z)), 1e-5);
  }
}

GTEST_TEST(AdmmTest, StructuredWorkIsLinearInHorizon) {
  const auto sys = example1_system();
  long long prev = 0;
  for (int N : {10, 20, 40}) {
    const auto prog = build_equ_mpct(sys, example1_constraints(), example1_design(N), vec({-5, 1}), vec({5, 0}), scalar(0));
    SolverSettings s;
    s.backend = LinearBackend::Structured;
    s.max_iter = 10;
    const auto r = AdmmSolver(s).solve(prog);
    if (prev > 0) EXPECT_NEAR(static_cast<double>(r.linsolve_flops_per_iter) / prev, 2.0, 0.3);
    prev = r.linsolve_flops_per_iter;
  }
}

GTEST_TEST(SocpTest, HmpcSolvesWithAdaptiveRho) {
  const auto prog = builder_outputs()[3];
  ASSERT_EQ(prog.kind, ProgramKind::SOCP);
  SolverSettings s;
  s.adaptive_rho = true;
  const auto r = AdmmSolver(s).solve(prog);
  EXPECT_EQ(r.status, SolveStatus::Solved);
  EXPECT_LE(prog.max_violation(r.z), 1e-6);
  EXPECT_THROW(admm_qp(prog), std::invalid_argument);
}

GTEST_TEST(ReferenceSolverTest, UnconstrainedQuadratic) {
  StructuredProgram p;
  p.H = to_sparse(Matrix(Matrix::Identity(1, 1)));
  p.q = scalar(-2);
  p.c = 1;
  p.Aeq = SparseMatrix(0, 1);
  p.beq = Vector(0);
  p.F = SparseMatrix(0, 1);
  p.g = Vector(0);
  p.layout.add("z", 0, 1);
  const auto r = dense_reference_solve(p);
  ASSERT_EQ(r.status, SolveStatus::Solved);
  EXPECT_NEAR(r.z(0), 1.0, 1e-12);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

GTEST_TEST(ReferenceSolverTest, KktResidualsOnRandomQps) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = test::random_qp(10 + 5 * trial, rng);
    const auto r = dense_reference_solve(p);
    ASSERT_EQ(r.status, SolveStatus::Solved);
    const auto k = kkt_residuals(p, r.z, r.y);
    // The duality-gap test is relative to the objective value.
    EXPECT_LE(k.max(), 1e-9 * std::max(1.0, std::abs(r.objective))) << "primal " << k.primal << " stat " << k.stationarity << " comp "
                             << k.complementarity;
  }
}

GTEST_TEST(ReferenceSolverTest, MatchesAdmmOnSocps) {
  const auto prog = builder_outputs()[4];
  ASSERT_EQ(prog.kind, ProgramKind::SOCP);
  SolverSettings s;
  s.eps_abs = s.eps_rel = 1e-10;
  s.adaptive_rho = true;
  const auto a = AdmmSolver(s).solve(prog);
  const auto ref = dense_reference_solve(prog);
  ASSERT_EQ(ref.status, SolveStatus::Solved);
  EXPECT_NEAR(a.objective, ref.objective, 1e-5 * std::max(1.0, std::abs(ref.objective)));
}

GTEST_TEST(SolverSettingsTest, Validation) {
  SolverSettings s;
  EXPECT_NO_THROW(s.validate());
  s.alpha = 2.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SolverSettings{};
  s.rho = -1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_EQ(backend_from_string("structured"), LinearBackend::Structured);
  EXPECT_THROW(backend_from_string("gpu"), std::invalid_argument);
}

}  // namespace
}  // namespace mpct
