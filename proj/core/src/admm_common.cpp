#include "admm_common.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace mpct {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

const char* to_string(LinearBackend backend) {
  switch (backend) {
    case LinearBackend::Auto: return "auto";
    case LinearBackend::Structured: return "structured";
    case LinearBackend::Sparse: return "sparse";
    case LinearBackend::Dense: return "dense";
  }
  return "unknown";
}

LinearBackend backend_from_string(const std::string& name) {
  if (name == "auto") return LinearBackend::Auto;
  if (name == "structured") return LinearBackend::Structured;
  if (name == "sparse") return LinearBackend::Sparse;
  if (name == "dense") return LinearBackend::Dense;
  throw std::invalid_argument("unknown linear backend '" + name + "'");
}

void SolverSettings::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("solver: rho must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("solver: sigma must be positive");
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("solver: alpha must lie in (0, 2)");
  if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw std::invalid_argument("solver: tolerances must be positive");
  if (!(eps_prim_inf > 0.0) || !(eps_dual_inf > 0.0))
    throw std::invalid_argument("solver: infeasibility tolerances must be positive");
  if (max_iter < 1) throw std::invalid_argument("solver: max_iter must be at least 1");
  if (check_interval < 1) throw std::invalid_argument("solver: check_interval must be at least 1");
  if (adaptive_rho_interval < 1) throw std::invalid_argument("solver: adaptive_rho_interval must be at least 1");
  if (!(eq_rho_scale >= 1.0)) throw std::invalid_argument("solver: eq_rho_scale must be at least 1");
}

std::pair<Vector, double> project_soc(const Vector& s, double t) {
  const double ns = s.norm();
  if (ns <= t) return {s, t};
  if (ns <= -t) return {Vector::Zero(s.size()), 0.0};
  const double a = 0.5 * (t + ns);
  return {(a / ns) * s, a};
}

double KktResiduals::max() const { return std::max({primal, stationarity, complementarity, dual_feasibility}); }

namespace {

double cone_distance(const Vector& v) {
  const auto [s, t] = project_soc(v.tail(v.size() - 1), v(0));
  Vector p(v.size());
  p << t, s;
  return (v - p).norm();
}

}  // namespace

KktResiduals kkt_residuals(const StructuredProgram& prog, const Vector& z, const Vector& y) {
  const int me = static_cast<int>(prog.Aeq.rows()), mi = static_cast<int>(prog.F.rows());
  if (y.size() != me + mi + prog.num_cone_rows()) throw DimensionError("kkt_residuals: multiplier size mismatch");
  KktResiduals r;
  r.primal = std::max(0.0, prog.max_violation(z));
  Vector grad = 2.0 * (prog.H * z) + prog.q;
  if (me > 0) grad += prog.Aeq.transpose() * y.head(me);
  if (mi > 0) {
    const Vector yi = y.segment(me, mi);
    grad += prog.F.transpose() * yi;
    r.dual_feasibility = std::max(r.dual_feasibility, (-yi).maxCoeff());
    r.complementarity = std::max(r.complementarity, (yi.array() * (prog.F * z - prog.g).array()).abs().maxCoeff());
  }
  int row = me + mi;
  for (const auto& k : prog.cones) {
    const Vector yc = y.segment(row, k.size());
    grad += k.M.transpose() * yc;
    r.dual_feasibility = std::max(r.dual_feasibility, cone_distance(-yc));
    r.complementarity = std::max(r.complementarity, std::abs(yc.dot(k.M * z + k.b)));
    row += k.size();
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();
  return r;
}

namespace detail {

void ConstraintSet::project(Eigen::Ref<Vector> v) const {
  for (int i = 0; i < num_box; ++i) v(i) = std::clamp(v(i), l(i), u(i));
  for (const auto& c : cones) {
    const auto b = cone_shift.segment(c.start - num_box, c.size);
    const Vector w = v.segment(c.start, c.size) + b;
    const auto [s, t] = project_soc(w.tail(c.size - 1), w(0));
    v(c.start) = t - b(0);
    v.segment(c.start + 1, c.size - 1) = s - b.tail(c.size - 1);
  }
}

Vector ConstraintSet::penalties(double rho, double eq_scale) const {
  Vector r = Vector::Constant(rows(), rho);
  r.head(num_eq).setConstant(rho * eq_scale);
  return r;
}

ConstraintSet stack_constraints(const StructuredProgram& prog) {
  ConstraintSet cs;
  const int n = prog.dim();
  const int me = static_cast<int>(prog.Aeq.rows()), mi = static_cast<int>(prog.F.rows());
  const int mc = prog.num_cone_rows();
  cs.num_eq = me;
  cs.num_box = me + mi;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(prog.Aeq.nonZeros() + prog.F.nonZeros());
  auto append = [&](const SparseMatrix& M, int row0) {
    for (int j = 0; j < M.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(M, j); it; ++it) t.emplace_back(row0 + it.row(), j, it.value());
  };
  append(prog.Aeq, 0);
  append(prog.F, me);
  cs.l.resize(me + mi);
  cs.u.resize(me + mi);
  cs.l.head(me) = prog.beq;
  cs.u.head(me) = prog.beq;
  cs.l.tail(mi).setConstant(-std::numeric_limits<double>::infinity());
  cs.u.tail(mi) = prog.g;
  cs.cone_shift.resize(mc);
  int row = me + mi;
  for (const auto& k : prog.cones) {
    append(k.M, row);
    cs.cone_shift.segment(row - me - mi, k.size()) = k.b;
    cs.cones.push_back({row, k.size()});
    row += k.size();
  }
  cs.A.resize(row, n);
  cs.A.setFromTriplets(t.begin(), t.end());
  cs.A.makeCompressed();
  return cs;
}

Residuals compute_residuals(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& x,
                            const Vector& z, const Vector& y, const SolverSettings& s) {
  auto inf_norm = [](const Vector& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; };
  const Vector Ax = cs.A * x;
  const Vector Px = P * x;
  const Vector Aty = cs.A.transpose() * y;
  Residuals r;
  r.primal = inf_norm(Ax - z);
  r.dual = inf_norm(Px + q + Aty);
  r.primal_scale = std::max(inf_norm(Ax), inf_norm(z));
  r.dual_scale = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(q)});
  r.eps_primal = s.eps_abs + s.eps_rel * r.primal_scale;
  r.eps_dual = s.eps_abs + s.eps_rel * r.dual_scale;
  return r;
}

bool primal_infeasible(const ConstraintSet& cs, const Vector& dy, double eps) {
  if (dy.size() == 0) return false;
  const double norm = dy.cwiseAbs().maxCoeff();
  if (norm < 1e-30) return false;
  const Vector Atdy = cs.A.transpose() * dy;
  if (Atdy.size() > 0 && Atdy.cwiseAbs().maxCoeff() > eps * norm) return false;
  double support = 0.0;
  for (int i = 0; i < cs.num_box; ++i) {
    if (dy(i) > 0.0) {
      if (!std::isfinite(cs.u(i))) {
        if (dy(i) > eps * norm) return false;
      } else {
        support += cs.u(i) * dy(i);
      }
    } else if (dy(i) < 0.0) {
      if (!std::isfinite(cs.l(i))) {
        if (-dy(i) > eps * norm) return false;
      } else {
        support += cs.l(i) * dy(i);
      }
    }
  }
  for (const auto& c : cs.cones) {
    const Vector w = -dy.segment(c.start, c.size);
    const auto [s, t] = project_soc(w.tail(c.size - 1), w(0));
    Vector p(c.size);
    p << t, s;
    if ((w - p).cwiseAbs().maxCoeff() > eps * norm) return false;
    support += w.dot(cs.cone_shift.segment(c.start - cs.num_box, c.size));
  }
  return support < -eps * norm;
}

bool dual_infeasible(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& dx, double eps) {
  if (dx.size() == 0) return false;
  const double norm = dx.cwiseAbs().maxCoeff();
  if (norm < 1e-30) return false;
  if ((P * dx).cwiseAbs().maxCoeff() > eps * norm) return false;
  if (q.dot(dx) >= -eps * norm) return false;
  const Vector Adx = cs.A * dx;
  for (int i = 0; i < cs.num_box; ++i) {
    if (std::isfinite(cs.u(i)) && Adx(i) > eps * norm) return false;
    if (std::isfinite(cs.l(i)) && Adx(i) < -eps * norm) return false;
  }
  for (const auto& c : cs.cones) {
    const Vector w = Adx.segment(c.start, c.size);
    const auto [s, t] = project_soc(w.tail(c.size - 1), w(0));
    Vector p(c.size);
    p << t, s;
    if ((w - p).cwiseAbs().maxCoeff() > eps * norm) return false;
  }
  return true;
}

PolishOutcome polish(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const Vector& z,
                     const Vector& y) {
  const int n = static_cast<int>(P.rows());
  std::vector<int> rows;
  std::vector<double> rhs_rows;
  for (int i = 0; i < cs.num_box; ++i) {
    if (i < cs.num_eq) {
      rows.push_back(i);
      rhs_rows.push_back(cs.u(i));
    } else if (std::isfinite(cs.u(i)) && cs.u(i) - z(i) < y(i)) {
      rows.push_back(i);
      rhs_rows.push_back(cs.u(i));
    } else if (std::isfinite(cs.l(i)) && z(i) - cs.l(i) < -y(i)) {
      rows.push_back(i);
      rhs_rows.push_back(cs.l(i));
    }
  }
  const int k = static_cast<int>(rows.size());
  std::vector<Eigen::Triplet<double>> sel;
  for (int r = 0; r < k; ++r) sel.emplace_back(r, rows[r], 1.0);
  SparseMatrix S(k, cs.rows());
  S.setFromTriplets(sel.begin(), sel.end());
  const SparseMatrix Aact = S * cs.A;

  const double delta = 1e-9;
  std::vector<Eigen::Triplet<double>> t;
  auto append = [&](const SparseMatrix& M, int r0, int c0, double scale) {
    for (int j = 0; j < M.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(M, j); it; ++it) t.emplace_back(r0 + it.row(), c0 + j, scale * it.value());
  };
  append(P, 0, 0, 1.0);
  append(Aact, n, 0, 1.0);
  append(SparseMatrix(Aact.transpose()), 0, n, 1.0);
  SparseMatrix K0(n + k, n + k);
  K0.setFromTriplets(t.begin(), t.end());
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, delta);
  for (int i = 0; i < k; ++i) t.emplace_back(n + i, n + i, -delta);
  SparseMatrix K(n + k, n + k);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();

  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(K);
  PolishOutcome out;
  if (lu.info() != Eigen::Success) return out;
  Vector rhs(n + k);
  rhs.head(n) = -q;
  for (int r = 0; r < k; ++r) rhs(n + r) = rhs_rows[r];
  Vector sol = lu.solve(rhs);
  for (int it = 0; it < 5; ++it) sol += lu.solve(rhs - K0 * sol);
  if (!sol.allFinite()) return out;

  out.x = sol.head(n);
  out.y = Vector::Zero(cs.rows());
  for (int r = 0; r < k; ++r) out.y(rows[r]) = sol(n + r);
  out.z = cs.A * out.x;
  cs.project(out.z);
  out.accepted = true;
  return out;
}


bool refine_by_polish(const SparseMatrix& P, const Vector& q, const ConstraintSet& cs, const SolverSettings& s,
                      Vector& x, Vector& z, Vector& y, Residuals& rr) {
  const auto pol = polish(P, q, cs, z, y);
  if (!pol.accepted) return false;
  const auto pr = compute_residuals(P, q, cs, pol.x, pol.z, pol.y, s);
  for (int i = cs.num_eq; i < cs.num_box; ++i)
    if (pol.y(i) < -rr.eps_dual) return false;
  if (pr.primal > std::max(rr.primal, pr.eps_primal) || pr.dual > std::max(rr.dual, pr.eps_dual)) return false;
  x = pol.x;
  z = pol.z;
  y = pol.y;
  rr = pr;
  return true;
}

long long matvec_flops(const SparseMatrix& P, const SparseMatrix& A) {
  return 2 * P.nonZeros() + 4 * A.nonZeros() + 10 * (A.rows() + A.cols());
}

}  // namespace detail
}  // namespace mpct
