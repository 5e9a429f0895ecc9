#include "mpct/formulations.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpct {
namespace {

// Offsets of the interleaved stage block x_0, u_0, ..., u_{N-1}, x_N.
struct Stages {
  int base = 0, nx = 0, nu = 0, N = 0;
  int x(int k) const { return base + k * (nx + nu); }
  int u(int k) const { return base + k * (nx + nu) + nx; }
  int end() const { return x(N) + nx; }

  void add_to(VarLayout& layout) const {
    layout.add("x", x(0), nx, N + 1, nx + nu);
    layout.add("u", u(0), nu, N, nx + nu);
  }
};

Matrix eye(int n) { return Matrix::Identity(n, n); }

void check_state(const LinearSystem& sys, const Vector& x_now) {
  if (x_now.size() != sys.nx()) throw DimensionError("builder: state has the wrong dimension");
}

void check_horizon(const TrackingDesign& d) {
  if (d.N < 1) throw std::invalid_argument("builder: horizon must be at least 1");
}

void add_initial_state(ProgramBuilder& b, const Stages& st, const Vector& x_now) {
  b.add_equality({{st.x(0), eye(st.nx)}}, x_now);
}

void add_dynamics(ProgramBuilder& b, const LinearSystem& sys, const Stages& st) {
  const Vector zero = Vector::Zero(st.nx);
  for (int k = 0; k < st.N; ++k)
    b.add_equality({{st.x(k + 1), eye(st.nx)}, {st.x(k), -sys.A()}, {st.u(k), -sys.B()}}, zero);
}

void add_stage_constraints(ProgramBuilder& b, const Polytope& Z, const Stages& st) {
  for (int k = 0; k < st.N; ++k) b.add_polytope(Z, {st.x(k), st.u(k)}, {st.nx, st.nu});
}

// (xa, ua) in sigma Z with xa = A xa + B ua.
void add_steady_state(ProgramBuilder& b, const LinearSystem& sys, const Polytope& Z, double sigma, int xa, int ua) {
  const int nx = sys.nx(), nu = sys.nu();
  b.add_equality({{xa, sys.A() - eye(nx)}, {ua, sys.B()}}, Vector::Zero(nx));
  const Polytope scaled(Z.F(), sigma * Z.g(), Z.Feq(), sigma * Z.geq());
  b.add_polytope(scaled, {xa, ua}, {nx, nu});
}

// sum_k ||x_k - xa||_Q^2 + ||u_k - ua||_R^2.
void add_tracking_stage_cost(ProgramBuilder& b, const TrackingDesign& d, const Stages& st, int xa, int ua) {
  const Vector zx = Vector::Zero(st.nx), zu = Vector::Zero(st.nu);
  for (int k = 0; k < st.N; ++k) {
    b.add_square({{st.x(k), eye(st.nx)}, {xa, -eye(st.nx)}}, zx, d.Q);
    b.add_square({{st.u(k), eye(st.nu)}, {ua, -eye(st.nu)}}, zu, d.R);
  }
}

void add_output_offset(ProgramBuilder& b, const LinearSystem& sys, const Matrix& S, int xa, int ua,
                       const Vector& yr) {
  if (yr.size() != sys.ny()) throw DimensionError("builder: reference has the wrong dimension");
  b.add_square({{xa, sys.C()}, {ua, sys.D()}}, -yr, S, true);
}

std::vector<int> iota(int from, int count) {
  std::vector<int> v(count);
  for (int i = 0; i < count; ++i) v[i] = from + i;
  return v;
}

void check_weights(const LinearSystem& sys, const TrackingDesign& d) {
  if (d.Q.rows() != sys.nx() || d.Q.cols() != sys.nx() || d.R.rows() != sys.nu() || d.R.cols() != sys.nu())
    throw DimensionError("builder: Q or R has the wrong size");
}

}  // namespace

Vector EconomicCost::linear(const Vector& theta) const {
  if (G.size() == 0 || theta.size() == 0) return c;
  return c + G * theta;
}

double EconomicCost::value(const Vector& x, const Vector& u, const Vector& theta) const {
  Vector z(x.size() + u.size());
  z << x, u;
  return z.dot(H * z) + linear(theta).dot(z) + d;
}

OutputBounds output_bounds_from_polytope(const Polytope& Z, int nx) {
  const int d = Z.dim();
  const int nu = d - nx;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Vector> rows;
  std::vector<double> lo, hi;
  std::vector<bool> used(Z.num_ineq(), false);
  for (int i = 0; i < Z.num_ineq(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const double ni = Z.F().row(i).norm();
    const Vector fi = Z.F().row(i).transpose() / ni;
    double low = -inf;
    for (int j = i + 1; j < Z.num_ineq(); ++j) {
      if (used[j]) continue;
      const double nj = Z.F().row(j).norm();
      if ((Z.F().row(j).transpose() / nj + fi).cwiseAbs().maxCoeff() <= 1e-12) {
        used[j] = true;
        low = -Z.g()(j) / nj;
        break;
      }
    }
    rows.push_back(fi);
    lo.push_back(low);
    hi.push_back(Z.g()(i) / ni);
  }
  for (int i = 0; i < Z.num_eq(); ++i) {
    const double ni = Z.Feq().row(i).norm();
    rows.push_back(Z.Feq().row(i).transpose() / ni);
    lo.push_back(Z.geq()(i) / ni);
    hi.push_back(Z.geq()(i) / ni);
  }
  OutputBounds ob;
  const int m = static_cast<int>(rows.size());
  ob.Cz.resize(m, nx);
  ob.Dz.resize(m, nu);
  ob.low.resize(m);
  ob.high.resize(m);
  for (int i = 0; i < m; ++i) {
    ob.Cz.row(i) = rows[i].head(nx).transpose();
    ob.Dz.row(i) = rows[i].tail(nu).transpose();
    ob.low(i) = lo[i];
    ob.high(i) = hi[i];
  }
  return ob;
}

StructuredProgram build_stan_mpc(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Polytope& Xf, const Vector& x_now, const Vector& xr, const Vector& ur) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  if (Xf.dim() != sys.nx()) throw DimensionError("build_stan_mpc: terminal set must live in state space");
  const Stages st{0, sys.nx(), sys.nu(), design.N};
  ProgramBuilder b(st.end());
  for (int k = 0; k < st.N; ++k) {
    b.add_square({{st.x(k), eye(st.nx)}}, -xr, design.Q);
    b.add_square({{st.u(k), eye(st.nu)}}, -ur, design.R);
  }
  b.add_square({{st.x(st.N), eye(st.nx)}}, -xr, design.P);
  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Z, st);
  b.add_polytope(Xf, {st.x(st.N)}, {st.nx});
  VarLayout layout;
  st.add_to(layout);
  return b.build(ProgramKind::QP, std::move(layout), {}, "stan_mpc");
}

StructuredProgram build_lin_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Polytope& Xt, const Vector& x_now, const Vector& yr) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  const int nx = sys.nx(), nu = sys.nu();
  if (Xt.dim() != 2 * nx + nu) throw DimensionError("build_lin_mpct: Xt must live in (x, xa, ua) space");
  const Stages st{0, nx, nu, design.N};
  const int xa = st.end(), ua = xa + nx;
  ProgramBuilder b(ua + nu);
  add_tracking_stage_cost(b, design, st, xa, ua);
  b.add_square({{st.x(st.N), eye(nx)}, {xa, -eye(nx)}}, Vector::Zero(nx), design.P);
  add_output_offset(b, sys, design.S, xa, ua, yr);

  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Z, st);
  add_steady_state(b, sys, Z, design.sigma, xa, ua);
  const Polytope Xt_ineq(Xt.F(), Xt.g());
  b.add_polytope(Xt_ineq, {st.x(st.N), xa, ua}, {nx, nx, nu});

  VarLayout layout;
  st.add_to(layout);
  layout.add("xa", xa, nx);
  layout.add("ua", ua, nu);
  return b.build(ProgramKind::QP, std::move(layout), iota(xa, nx + nu), "lin_mpct");
}

namespace {

StructuredProgram build_equ_common(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                   const Vector& x_now, const Vector* xr, const Vector* ur, const Vector* yr) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  const int nx = sys.nx(), nu = sys.nu();
  const Stages st{0, nx, nu, design.N};
  const int xa = st.end(), ua = xa + nx;
  ProgramBuilder b(ua + nu);
  add_tracking_stage_cost(b, design, st, xa, ua);
  if (yr != nullptr) {
    add_output_offset(b, sys, design.S, xa, ua, *yr);
  } else {
    if (xr->size() != nx || ur->size() != nu) throw DimensionError("build_equ_mpct: target has the wrong size");
    b.add_square({{xa, eye(nx)}}, -*xr, design.T, true);
    b.add_square({{ua, eye(nu)}}, -*ur, design.Su, true);
  }
  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Z, st);
  add_steady_state(b, sys, Z, design.sigma, xa, ua);
  b.add_equality({{st.x(st.N), eye(nx)}, {xa, -eye(nx)}}, Vector::Zero(nx));

  VarLayout layout;
  st.add_to(layout);
  layout.add("xa", xa, nx);
  layout.add("ua", ua, nu);
  return b.build(ProgramKind::QP, std::move(layout), iota(xa, nx + nu), yr ? "equ_mpct_output" : "equ_mpct");
}

}  // namespace

StructuredProgram build_equ_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                 const Vector& x_now, const Vector& xr, const Vector& ur) {
  return build_equ_common(sys, Z, design, x_now, &xr, &ur, nullptr);
}

StructuredProgram build_equ_mpct_output(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                        const Vector& x_now, const Vector& yr) {
  return build_equ_common(sys, Z, design, x_now, nullptr, nullptr, &yr);
}

StructuredProgram build_robust_mpct(const LinearSystem& sys, const TrackingDesign& design, const Zonotope& phi,
                                    const Polytope& Zbar, const Polytope& Xt_bar, const Vector& x_now,
                                    const Vector& yr) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  const int nx = sys.nx(), nu = sys.nu();
  if (phi.dim() != nx) throw DimensionError("build_robust_mpct: tube set must live in state space");
  if (Xt_bar.dim() != 2 * nx + nu) throw DimensionError("build_robust_mpct: Xt must live in (x, xa, ua) space");
  const Zonotope tube = phi.compacted();
  const int p = tube.num_generators();
  const Stages st{p, nx, nu, design.N};
  const int xa = st.end(), ua = xa + nx;
  ProgramBuilder b(ua + nu);
  add_tracking_stage_cost(b, design, st, xa, ua);
  b.add_square({{st.x(st.N), eye(nx)}, {xa, -eye(nx)}}, Vector::Zero(nx), design.P);
  add_output_offset(b, sys, design.S, xa, ua, yr);

  if (p > 0) {
    b.add_equality({{st.x(0), eye(nx)}, {0, tube.generators()}}, x_now - tube.center());
    b.add_inequality({{0, eye(p)}}, Vector::Ones(p));
    b.add_inequality({{0, -eye(p)}}, Vector::Ones(p));
  } else {
    b.add_equality({{st.x(0), eye(nx)}}, x_now - tube.center());
  }
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Zbar, st);
  add_steady_state(b, sys, Zbar, design.sigma, xa, ua);
  b.add_polytope(Polytope(Xt_bar.F(), Xt_bar.g()), {st.x(st.N), xa, ua}, {nx, nx, nu});

  VarLayout layout;
  if (p > 0) layout.add("lambda", 0, p);
  st.add_to(layout);
  layout.add("xa", xa, nx);
  layout.add("ua", ua, nu);
  return b.build(ProgramKind::QP, std::move(layout), iota(xa, nx + nu), "robust_mpct");
}

StructuredProgram build_periodic_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                      int tau, const Vector& x_now, const std::vector<Vector>& yr_window) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  if (tau < 1) throw std::invalid_argument("build_periodic_mpct: period must be at least 1");
  if (design.N > tau) throw std::invalid_argument("build_periodic_mpct: horizon must not exceed the period");
  if (static_cast<int>(yr_window.size()) != tau)
    throw DimensionError("build_periodic_mpct: reference window must hold one sample per period instant");
  const int nx = sys.nx(), nu = sys.nu();
  const Stages st{0, nx, nu, design.N};
  const int xa0 = st.end();
  const int ua0 = xa0 + (tau + 1) * nx;
  auto xa = [&](int k) { return xa0 + k * nx; };
  auto ua = [&](int k) { return ua0 + k * nu; };
  ProgramBuilder b(ua0 + tau * nu);

  const Vector zx = Vector::Zero(nx), zu = Vector::Zero(nu);
  for (int k = 0; k < st.N; ++k) {
    b.add_square({{st.x(k), eye(nx)}, {xa(k), -eye(nx)}}, zx, design.Q);
    b.add_square({{st.u(k), eye(nu)}, {ua(k), -eye(nu)}}, zu, design.R);
  }
  for (int k = 0; k < tau; ++k) add_output_offset(b, sys, design.S, xa(k), ua(k), yr_window[k]);

  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Z, st);
  const Polytope scaled(Z.F(), design.sigma * Z.g(), Z.Feq(), design.sigma * Z.geq());
  for (int k = 0; k < tau; ++k) {
    b.add_equality({{xa(k + 1), eye(nx)}, {xa(k), -sys.A()}, {ua(k), -sys.B()}}, zx);
    b.add_polytope(scaled, {xa(k), ua(k)}, {nx, nu});
  }
  b.add_equality({{xa(0), eye(nx)}, {xa(tau), -eye(nx)}}, zx);
  b.add_equality({{st.x(st.N), eye(nx)}, {xa(st.N), -eye(nx)}}, zx);

  VarLayout layout;
  st.add_to(layout);
  layout.add("xa", xa0, nx, tau + 1, nx);
  layout.add("ua", ua0, nu, tau, nu);
  return b.build(ProgramKind::QP, std::move(layout), {}, "periodic_mpct");
}

StructuredProgram build_hmpc(const LinearSystem& sys, const TrackingDesign& design, const OutputBounds& bounds,
                             const Vector& x_now, const Vector& xr, const Vector& ur) {
  check_state(sys, x_now);
  check_horizon(design);
  check_weights(sys, design);
  const int nx = sys.nx(), nu = sys.nu();
  if (!(design.omega > 0.0)) throw std::invalid_argument("build_hmpc: frequency must be positive");
  if (bounds.Cz.cols() != nx || bounds.Dz.cols() != nu || bounds.high.size() != bounds.low.size())
    throw DimensionError("build_hmpc: bounds do not match the system");
  for (int i = 0; i < bounds.rows(); ++i)
    if (!(bounds.low(i) < 0.0 && bounds.high(i) > 0.0))
      throw std::invalid_argument("build_hmpc: bounds must satisfy low < 0 < high");
  if (xr.size() != nx || ur.size() != nu) throw DimensionError("build_hmpc: target has the wrong size");

  const double w = design.omega;
  const Stages st{0, nx, nu, design.N};
  const int xe = st.end(), xs = xe + nx, xc = xs + nx;
  const int ue = xc + nx, us = ue + nu, uc = us + nu;
  ProgramBuilder b(uc + nu);

  const Vector zx = Vector::Zero(nx), zu = Vector::Zero(nu);
  for (int k = 0; k < st.N; ++k) {
    const double s = std::sin(w * k), c = std::cos(w * k);
    b.add_square({{st.x(k), eye(nx)}, {xe, -eye(nx)}, {xs, -s * eye(nx)}, {xc, -c * eye(nx)}}, zx, design.Q);
    b.add_square({{st.u(k), eye(nu)}, {ue, -eye(nu)}, {us, -s * eye(nu)}, {uc, -c * eye(nu)}}, zu, design.R);
  }
  b.add_square({{xe, eye(nx)}}, -xr, design.T, true);
  b.add_square({{ue, eye(nu)}}, -ur, design.Su, true);
  b.add_square({{xs, eye(nx)}}, zx, design.Th, true);
  b.add_square({{xc, eye(nx)}}, zx, design.Th, true);
  b.add_square({{us, eye(nu)}}, zu, design.Sh, true);
  b.add_square({{uc, eye(nu)}}, zu, design.Sh, true);

  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  for (int k = 0; k < st.N; ++k) {
    for (int i = 0; i < bounds.rows(); ++i) {
      const Matrix ci = bounds.Cz.row(i), di = bounds.Dz.row(i);
      if (std::isfinite(bounds.high(i)))
        b.add_inequality({{st.x(k), ci}, {st.u(k), di}}, Vector::Constant(1, bounds.high(i)));
      if (std::isfinite(bounds.low(i)))
        b.add_inequality({{st.x(k), -ci}, {st.u(k), -di}}, Vector::Constant(1, -bounds.low(i)));
    }
  }
  const double sN = std::sin(w * st.N), cN = std::cos(w * st.N);
  b.add_equality({{st.x(st.N), eye(nx)}, {xe, -eye(nx)}, {xs, -sN * eye(nx)}, {xc, -cN * eye(nx)}}, zx);
  b.add_equality({{xe, sys.A() - eye(nx)}, {ue, sys.B()}}, zx);
  b.add_equality({{xs, sys.A() - std::cos(w) * eye(nx)}, {xc, std::sin(w) * eye(nx)}, {us, sys.B()}}, zx);
  b.add_equality({{xc, sys.A() - std::cos(w) * eye(nx)}, {xs, -std::sin(w) * eye(nx)}, {uc, sys.B()}}, zx);

  const double sigma = design.sigma;
  for (int i = 0; i < bounds.rows(); ++i) {
    const Matrix ci = bounds.Cz.row(i), di = bounds.Dz.row(i);
    const std::vector<Term> s_terms{{xs, (Matrix(2, nx) << ci, Matrix::Zero(1, nx)).finished()},
                                    {xc, (Matrix(2, nx) << Matrix::Zero(1, nx), ci).finished()},
                                    {us, (Matrix(2, nu) << di, Matrix::Zero(1, nu)).finished()},
                                    {uc, (Matrix(2, nu) << Matrix::Zero(1, nu), di).finished()}};
    if (std::isfinite(bounds.high(i))) b.add_cone({{xe, -ci}, {ue, -di}}, sigma * bounds.high(i), s_terms, Vector::Zero(2));
    if (std::isfinite(bounds.low(i))) b.add_cone({{xe, ci}, {ue, di}}, -sigma * bounds.low(i), s_terms, Vector::Zero(2));
  }

  VarLayout layout;
  st.add_to(layout);
  layout.add("xe", xe, nx);
  layout.add("xs", xs, nx);
  layout.add("xc", xc, nx);
  layout.add("ue", ue, nu);
  layout.add("us", us, nu);
  layout.add("uc", uc, nu);
  return b.build(ProgramKind::SOCP, std::move(layout), iota(xe, 3 * (nx + nu)), "hmpc");
}

StructuredProgram build_econ_mpct(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                  const EconomicCost& cost, const Vector& theta, const Vector& x_star,
                                  const Vector& u_star, const Vector& x_now) {
  check_state(sys, x_now);
  check_horizon(design);
  const int nx = sys.nx(), nu = sys.nu();
  if (cost.H.rows() != nx + nu || cost.c.size() != nx + nu)
    throw DimensionError("build_econ_mpct: economic cost must act on (x, u)");
  if (x_star.size() != nx || u_star.size() != nu) throw DimensionError("build_econ_mpct: setpoint has the wrong size");
  if (design.gamma < 0.0) throw std::invalid_argument("build_econ_mpct: gamma must be nonnegative");
  const Stages st{0, nx, nu, design.N};
  const int xa = st.end(), ua = xa + nx, eta = ua + nu;
  const bool cone = design.gamma > 0.0;
  ProgramBuilder b(cone ? eta + 1 : eta);

  Vector zs(nx + nu);
  zs << x_star, u_star;
  const Vector lin = cost.linear(theta);
  const Matrix Ex = (Matrix(nx + nu, nx) << eye(nx), Matrix::Zero(nu, nx)).finished();
  const Matrix Eu = (Matrix(nx + nu, nu) << Matrix::Zero(nx, nu), eye(nu)).finished();
  for (int k = 0; k < st.N; ++k) {
    b.add_square({{st.x(k), Ex}, {st.u(k), Eu}, {xa, -Ex}, {ua, -Eu}}, zs, cost.H);
    b.add_linear(st.x(k), lin.head(nx));
    b.add_linear(st.u(k), lin.tail(nu));
    b.add_linear(xa, -lin.head(nx));
    b.add_linear(ua, -lin.tail(nu));
    b.add_constant(lin.dot(zs) + cost.d);
  }
  b.add_square({{xa, eye(nx)}}, -x_star, design.T, true);
  b.add_square({{ua, eye(nu)}}, -u_star, design.Su, true);
  if (cone) {
    b.add_linear(eta, Vector::Constant(1, design.gamma));
    b.add_cone({{eta, Matrix::Ones(1, 1)}}, 0.0, {{xa, eye(nx)}}, -x_star);
  }

  add_initial_state(b, st, x_now);
  add_dynamics(b, sys, st);
  add_stage_constraints(b, Z, st);
  add_steady_state(b, sys, Z, design.sigma, xa, ua);
  b.add_equality({{st.x(st.N), eye(nx)}, {xa, -eye(nx)}}, Vector::Zero(nx));

  VarLayout layout;
  st.add_to(layout);
  layout.add("xa", xa, nx);
  layout.add("ua", ua, nu);
  if (cone) layout.add("eta", eta, 1);
  return b.build(cone ? ProgramKind::SOCP : ProgramKind::QP, std::move(layout), iota(xa, nx + nu + (cone ? 1 : 0)),
                 "econ_mpct");
}

Vector HarmonicParameters::x_at(double omega, int k) const {
  return xe + std::sin(omega * k) * xs + std::cos(omega * k) * xc;
}

Vector HarmonicParameters::u_at(double omega, int k) const {
  return ue + std::sin(omega * k) * us + std::cos(omega * k) * uc;
}

HarmonicParameters harmonic_parameters(const StructuredProgram& prog, const Vector& z) {
  const auto& L = prog.layout;
  return {L.get(z, "xe"), L.get(z, "xs"), L.get(z, "xc"), L.get(z, "ue"), L.get(z, "us"), L.get(z, "uc")};
}

}  // namespace mpct
