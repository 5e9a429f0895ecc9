#include "mpct/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <stdexcept>

#include "mpct/lp.hpp"
#include "mpct/solver.hpp"

namespace mpct {
namespace {

Matrix eye(int n) { return Matrix::Identity(n, n); }

// Steady-state rows and sigma Z over (x, u) stacked at `off`.
void add_steady(ProgramBuilder& b, const LinearSystem& sys, const Polytope& Z, double sigma, int off) {
  const int nx = sys.nx(), nu = sys.nu();
  b.add_equality({{off, sys.A() - eye(nx)}, {off + nx, sys.B()}}, Vector::Zero(nx));
  b.add_polytope(Polytope(Z.F(), sigma * Z.g(), Z.Feq(), sigma * Z.geq()), {off}, {nx + nu});
}

SolveResult solve_oracle(const StructuredProgram& prog, const char* who) {
  const SolveResult r = dense_reference_solve(prog);
  if (r.status != SolveStatus::Solved) throw MpctError(std::string(who) + ": reference solve did not converge");
  return r;
}

bool feasible(const StructuredProgram& prog) {
  const auto r = lp::find_feasible(Matrix(prog.F), prog.g, Matrix(prog.Aeq), prog.beq);
  return r.status == lp::LpStatus::Optimal;
}

void check_sigma(double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must lie in [0, 1)");
}

}  // namespace

SteadyState steady_state_for_ref(const LinearSystem& sys, const Polytope& Z, double sigma, const Vector& yr) {
  check_sigma(sigma);
  if (yr.size() != sys.ny()) throw DimensionError("steady_state_for_ref: reference has the wrong dimension");
  const int nx = sys.nx(), nu = sys.nu();
  ProgramBuilder b(nx + nu);
  b.add_square({{0, eye(nx + nu)}}, Vector::Zero(nx + nu), eye(nx + nu));
  add_steady(b, sys, Z, sigma, 0);
  b.add_equality({{0, sys.C()}, {nx, sys.D()}}, yr);
  VarLayout layout;
  layout.add("x", 0, nx);
  layout.add("u", nx, nu);
  const auto prog = b.build(ProgramKind::QP, std::move(layout), {}, "steady_state");
  if (!feasible(prog)) throw UnreachableReferenceError("reference is not a reachable setpoint");
  const auto r = solve_oracle(prog, "steady_state_for_ref");
  return {r.z.head(nx), r.z.tail(nu)};
}

SteadyState steady_state_target(const LinearSystem& sys, const Vector& yr) {
  if (yr.size() != sys.ny()) throw DimensionError("steady_state_target: reference has the wrong dimension");
  const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  Matrix M(nx + ny, nx + nu);
  M << sys.A() - eye(nx), sys.B(), sys.C(), sys.D();
  Vector rhs = Vector::Zero(nx + ny);
  rhs.tail(ny) = yr;
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
  const Vector z = cod.solve(rhs);
  return {z.head(nx), z.tail(nu)};
}

SteadyState economic_setpoint(const LinearSystem& sys, const Polytope& Z, double sigma, const EconomicCost& cost,
                              const Vector& theta) {
  check_sigma(sigma);
  const int nx = sys.nx(), nu = sys.nu();
  if (cost.H.rows() != nx + nu || cost.c.size() != nx + nu)
    throw DimensionError("economic_setpoint: economic cost must act on (x, u)");
  ProgramBuilder b(nx + nu);
  b.add_square({{0, eye(nx + nu)}}, Vector::Zero(nx + nu), cost.H);
  b.add_linear(0, cost.linear(theta));
  b.add_constant(cost.d);
  add_steady(b, sys, Z, sigma, 0);
  VarLayout layout;
  layout.add("x", 0, nx);
  layout.add("u", nx, nu);
  const auto prog = b.build(ProgramKind::QP, std::move(layout), {}, "economic_setpoint");
  if (!feasible(prog)) throw EmptySetError("economic_setpoint: no admissible steady state");
  const auto r = solve_oracle(prog, "economic_setpoint");
  return {r.z.head(nx), r.z.tail(nu)};
}

SteadyState closest_steady_state(const LinearSystem& sys, const Polytope& Z, double sigma, const Vector& xr,
                                 const Vector& ur, const Matrix& T, const Matrix& Su) {
  check_sigma(sigma);
  const int nx = sys.nx(), nu = sys.nu();
  if (xr.size() != nx || ur.size() != nu || T.rows() != nx || Su.rows() != nu)
    throw DimensionError("closest_steady_state: target or weights have the wrong size");
  ProgramBuilder b(nx + nu);
  b.add_square({{0, eye(nx)}}, -xr, T);
  b.add_square({{nx, eye(nu)}}, -ur, Su);
  add_steady(b, sys, Z, sigma, 0);
  VarLayout layout;
  layout.add("x", 0, nx);
  layout.add("u", nx, nu);
  const auto prog = b.build(ProgramKind::QP, std::move(layout), {}, "closest_steady_state");
  if (!feasible(prog)) throw EmptySetError("closest_steady_state: no admissible steady state");
  const auto r = solve_oracle(prog, "closest_steady_state");
  return {r.z.head(nx), r.z.tail(nu)};
}

ReachableReference optimal_reachable_reference(const LinearSystem& sys, const Polytope& Z, double sigma,
                                               const Vector& yr, const Matrix& S, OffsetKind kind) {
  check_sigma(sigma);
  const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  if (yr.size() != ny || S.rows() != ny || S.cols() != ny)
    throw DimensionError("optimal_reachable_reference: reference or weight has the wrong size");
  const bool norm = kind == OffsetKind::Norm;
  const int n = nx + nu + (norm ? 1 : 0);
  ProgramBuilder b(n);
  if (norm) {
    const Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("optimal_reachable_reference: S must be PD");
    const Matrix Lt = llt.matrixU();
    b.add_linear(nx + nu, Vector::Ones(1));
    b.add_cone({{nx + nu, Matrix::Ones(1, 1)}}, 0.0, {{0, Lt * sys.C()}, {nx, Lt * sys.D()}}, -Lt * yr);
  } else {
    b.add_square({{0, sys.C()}, {nx, sys.D()}}, -yr, S);
  }
  add_steady(b, sys, Z, sigma, 0);
  VarLayout layout;
  layout.add("x", 0, nx);
  layout.add("u", nx, nu);
  if (norm) layout.add("t", nx + nu, 1);
  const auto prog = b.build(norm ? ProgramKind::SOCP : ProgramKind::QP, std::move(layout), {}, "reachable_reference");
  if (!feasible(prog)) throw EmptySetError("optimal_reachable_reference: no admissible steady state");
  const auto r = solve_oracle(prog, "optimal_reachable_reference");
  ReachableReference out;
  out.steady = {r.z.head(nx), r.z.segment(nx, nu)};
  out.ya = sys.C() * out.steady.x + sys.D() * out.steady.u;
  const Vector e = out.ya - yr;
  out.offset = norm ? std::sqrt(e.dot(S * e)) : e.dot(S * e);
  return out;
}

PeriodicReference optimal_periodic_reference(const LinearSystem& sys, const Polytope& Z, double sigma, int tau,
                                             const std::vector<Vector>& yr_traj, const Matrix& S) {
  check_sigma(sigma);
  if (tau < 1 || static_cast<int>(yr_traj.size()) != tau)
    throw DimensionError("optimal_periodic_reference: trajectory must hold tau samples");
  const int nx = sys.nx(), nu = sys.nu();
  const int ua0 = (tau + 1) * nx;
  auto xa = [&](int k) { return k * nx; };
  auto ua = [&](int k) { return ua0 + k * nu; };
  ProgramBuilder b(ua0 + tau * nu);
  const Polytope scaled(Z.F(), sigma * Z.g(), Z.Feq(), sigma * Z.geq());
  for (int k = 0; k < tau; ++k) {
    if (yr_traj[k].size() != sys.ny()) throw DimensionError("optimal_periodic_reference: bad sample size");
    b.add_square({{xa(k), sys.C()}, {ua(k), sys.D()}}, -yr_traj[k], S);
    b.add_equality({{xa(k + 1), eye(nx)}, {xa(k), -sys.A()}, {ua(k), -sys.B()}}, Vector::Zero(nx));
    b.add_polytope(scaled, {xa(k), ua(k)}, {nx, nu});
  }
  b.add_equality({{xa(0), eye(nx)}, {xa(tau), -eye(nx)}}, Vector::Zero(nx));
  VarLayout layout;
  layout.add("xa", 0, nx, tau + 1, nx);
  layout.add("ua", ua0, nu, tau, nu);
  const auto prog = b.build(ProgramKind::QP, std::move(layout), {}, "periodic_reference");
  if (!feasible(prog)) throw EmptySetError("optimal_periodic_reference: no admissible periodic trajectory");
  const auto r = solve_oracle(prog, "optimal_periodic_reference");
  PeriodicReference out;
  for (int k = 0; k <= tau; ++k) out.xa.push_back(r.z.segment(xa(k), nx));
  for (int k = 0; k < tau; ++k) {
    out.ua.push_back(r.z.segment(ua(k), nu));
    out.ya.push_back(sys.C() * out.xa[k] + sys.D() * out.ua[k]);
    const Vector e = out.ya[k] - yr_traj[k];
    out.offset += e.dot(S * e);
  }
  return out;
}

}  // namespace mpct
