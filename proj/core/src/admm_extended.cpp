#include <algorithm>
#include <stdexcept>

#include "admm_common.hpp"
#include "mpct/banded.hpp"

namespace mpct {
namespace {

SparseMatrix select_columns(const SparseMatrix& M, const std::vector<int>& cols) {
  std::vector<Eigen::Triplet<double>> t;
  for (size_t k = 0; k < cols.size(); ++k)
    for (SparseMatrix::InnerIterator it(M, cols[k]); it; ++it) t.emplace_back(it.row(), static_cast<int>(k), it.value());
  SparseMatrix out(M.rows(), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out(k) = v(idx[k]);
  return out;
}

}  // namespace

SolveResult admm_qp_extended(const StructuredProgram& prog, const SolverSettings& s) {
  s.validate();
  if (!prog.structure) throw std::invalid_argument("admm_qp_extended: program has no reference-block descriptor");
  const int n = prog.dim();
  const detail::ConstraintSet cs = detail::stack_constraints(prog);
  const int m = cs.rows();

  std::vector<int> ga = prog.structure->global;
  std::sort(ga.begin(), ga.end());
  std::vector<int> gs;
  {
    std::vector<bool> is_global(n, false);
    for (int i : ga) is_global[i] = true;
    for (int i = 0; i < n; ++i)
      if (!is_global[i]) gs.push_back(i);
  }
  const int na = static_cast<int>(ga.size()), ns = static_cast<int>(gs.size());

  SparseMatrix P = s.feasibility_only ? SparseMatrix(n, n) : SparseMatrix(2.0 * prog.H);
  P.makeCompressed();
  const Vector q = s.feasibility_only ? Vector::Zero(n) : prog.q;
  const double c = s.feasibility_only ? 0.0 : prog.c;

  // Column blocks of P and A; rows of P are recovered by symmetry.
  const SparseMatrix P_s = select_columns(P, gs);  // n x ns
  const SparseMatrix P_a = select_columns(P, ga);  // n x na
  const SparseMatrix Pt_s(P_s.transpose()), Pt_a(P_a.transpose());
  const SparseMatrix Pss = select_columns(Pt_s, gs), Psa = select_columns(Pt_s, ga);
  const SparseMatrix Pas = select_columns(Pt_a, gs), Paa = select_columns(Pt_a, ga);
  const SparseMatrix As = select_columns(cs.A, gs), Aa = select_columns(cs.A, ga);
  const Vector qs = gather(q, gs), qa = gather(q, ga);

  double rho = s.rho;
  Vector R;
  SparseMatrix Is(ns, ns);
  Is.setIdentity();
  BandedFactor fss;
  Eigen::LLT<Matrix> faa;
  int factorizations = 0;
  auto factor = [&]() {
    R = cs.penalties(rho, s.eq_rho_scale);
    const SparseMatrix Mss = Pss + s.sigma * Is + SparseMatrix(As.transpose() * R.asDiagonal() * As);
    fss = BandedFactor::factorize(Mss);
    const Matrix Maa =
        Matrix(Paa) + s.sigma * Matrix::Identity(na, na) + Matrix(Aa.transpose() * R.asDiagonal() * Aa);
    faa.compute(Maa);
    if (faa.info() != Eigen::Success)
      throw std::runtime_error("admm_qp_extended: reference block is not positive definite");
    ++factorizations;
  };
  factor();

  Vector xs = Vector::Zero(ns), xa = Vector::Zero(na), v = Vector::Zero(m), y = Vector::Zero(m);
  const double tau = std::min(s.alpha, 1.6);

  auto assemble = [&](const Vector& ps, const Vector& pa) {
    Vector x(n);
    for (int k = 0; k < ns; ++k) x(gs[k]) = ps(k);
    for (int k = 0; k < na; ++k) x(ga[k]) = pa(k);
    return x;
  };
  auto a_step = [&](const Vector& s_cur, const Vector& a_prox, const Vector& w) {
    const Vector rhs = s.sigma * a_prox - qa - Pas * s_cur - Aa.transpose() * R.cwiseProduct(As * s_cur - w);
    return Vector(faa.solve(rhs));
  };

  SolveResult res;
  res.backend = "extended";
  res.linsolve_flops_per_iter = fss.solve_flops() + 4LL * na * na;
  res.iteration_flops = res.linsolve_flops_per_iter + detail::matvec_flops(P, cs.A) + 2 * Pss.nonZeros();
  res.factor_flops = fss.factor_flops();

  detail::Residuals rr;
  bool have_residuals = false;
  Vector x = Vector::Zero(n);
  int k = 0;
  for (k = 1; k <= s.max_iter; ++k) {
    const Vector w = v - y.cwiseQuotient(R);
    const Vector a_half = a_step(xs, xa, w);
    Vector rhs_s = s.sigma * xs - qs - Psa * a_half - As.transpose() * R.cwiseProduct(Aa * a_half - w);
    fss.solve_in_place(rhs_s);
    const Vector xs_new = rhs_s;
    const Vector xa_new = a_step(xs_new, xa, w);
    const Vector x_prev = x;
    x = assemble(xs_new, xa_new);
    xs = xs_new;
    xa = xa_new;

    const Vector Ax = cs.A * x;
    Vector v_new = Ax + y.cwiseQuotient(R);
    cs.project(v_new);
    const Vector y_new = y + tau * R.cwiseProduct(Ax - v_new);
    const Vector dy = y_new - y;
    const Vector dx = x - x_prev;
    v = std::move(v_new);
    y = y_new;

    const bool check = (k % s.check_interval == 0) || k == s.max_iter;
    if (check || s.record_history) {
      rr = detail::compute_residuals(P, q, cs, x, v, y, s);
      have_residuals = true;
      if (s.record_history) res.history.push_back({k, rr.primal, rr.dual, detail::objective_from(P, q, c, x)});
    }
    if (check) {
      if (rr.primal <= rr.eps_primal && rr.dual <= rr.eps_dual) {
        res.status = SolveStatus::Solved;
        break;
      }
      if (detail::primal_infeasible(cs, dy, s.eps_prim_inf)) {
        res.status = SolveStatus::PrimalInfeasible;
        break;
      }
      if (detail::dual_infeasible(P, q, cs, dx, s.eps_dual_inf)) {
        res.status = SolveStatus::DualInfeasible;
        break;
      }
    }
    if (s.adaptive_rho && k % s.adaptive_rho_interval == 0) {
      const auto a = detail::compute_residuals(P, q, cs, x, v, y, s);
      const double pn = a.primal / std::max(a.primal_scale, 1e-30);
      const double dn = a.dual / std::max(a.dual_scale, 1e-30);
      if (pn > 0.0 && dn > 0.0) {
        const double rho_new = std::clamp(rho * std::sqrt(pn / dn), 1e-6, 1e6);
        if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
          rho = rho_new;
          factor();
        }
      }
    }
  }
  res.iterations = std::min(k, s.max_iter);
  if (!have_residuals) rr = detail::compute_residuals(P, q, cs, x, v, y, s);

  if (s.polish && prog.cones.empty() &&
      (res.status == SolveStatus::Solved || res.status == SolveStatus::MaxIter)) {
    if (detail::refine_by_polish(P, q, cs, s, x, v, y, rr)) {
      res.polished = true;
      if (rr.primal <= rr.eps_primal && rr.dual <= rr.eps_dual) res.status = SolveStatus::Solved;
    }
  }
  res.z = x;
  res.y = y;
  res.primal_residual = rr.primal;
  res.dual_residual = rr.dual;
  res.objective = s.feasibility_only ? 0.0 : prog.objective(x);
  return res;
}

}  // namespace mpct
