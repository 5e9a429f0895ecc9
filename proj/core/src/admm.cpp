#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "admm_common.hpp"
#include "mpct/banded.hpp"

namespace mpct {
namespace {

using detail::ConstraintSet;

// Solver for (P + sigma I + A' R A) x = b.
class KktSystem {
 public:
  virtual ~KktSystem() = default;
  virtual Vector solve(const Vector& b) const = 0;
  virtual long long solve_flops() const = 0;
  virtual long long factor_flops() const = 0;
  virtual const char* name() const = 0;
};

SparseMatrix regularized(const SparseMatrix& P, const SparseMatrix& A, const Vector& R, double sigma) {
  const int n = static_cast<int>(P.rows());
  SparseMatrix I(n, n);
  I.setIdentity();
  SparseMatrix M = P + sigma * I + SparseMatrix(A.transpose() * R.asDiagonal() * A);
  M.makeCompressed();
  return M;
}

class DenseKkt : public KktSystem {
 public:
  explicit DenseKkt(const SparseMatrix& M) : llt_(Matrix(M)), n_(M.rows()) {
    if (llt_.info() != Eigen::Success) throw std::runtime_error("admm: dense factorization failed");
  }
  Vector solve(const Vector& b) const override { return llt_.solve(b); }
  long long solve_flops() const override { return 2 * n_ * n_; }
  long long factor_flops() const override { return n_ * n_ * n_ / 3; }
  const char* name() const override { return "dense"; }

 private:
  Eigen::LLT<Matrix> llt_;
  long long n_;
};

class SparseKkt : public KktSystem {
 public:
  explicit SparseKkt(const SparseMatrix& M) : n_(M.rows()) {
    ldlt_.compute(M);
    if (ldlt_.info() != Eigen::Success) throw std::runtime_error("admm: sparse factorization failed");
    nnz_ = ldlt_.matrixL().nestedExpression().nonZeros();
  }
  Vector solve(const Vector& b) const override { return ldlt_.solve(b); }
  long long solve_flops() const override { return 4 * nnz_ + 3 * n_; }
  long long factor_flops() const override { return 0; }
  const char* name() const override { return "sparse"; }

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  long long n_;
  long long nnz_ = 0;
};

class StructuredKkt : public KktSystem {
 public:
  StructuredKkt(const SparseMatrix& MB, const Matrix& U, const Matrix& V)
      : solver_(BandedFactor::factorize(MB), U, V) {}
  Vector solve(const Vector& b) const override { return solver_.solve(b); }
  long long solve_flops() const override { return solver_.solve_flops(); }
  long long factor_flops() const override { return solver_.factor().factor_flops(); }
  const char* name() const override { return "structured"; }

 private:
  SemibandedSolver solver_;
};

bool same_sparse(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  if (!a.isCompressed() || !b.isCompressed()) return false;
  const auto nnz = static_cast<size_t>(a.nonZeros());
  return std::memcmp(a.valuePtr(), b.valuePtr(), nnz * sizeof(double)) == 0 &&
         std::memcmp(a.innerIndexPtr(), b.innerIndexPtr(), nnz * sizeof(int)) == 0 &&
         std::memcmp(a.outerIndexPtr(), b.outerIndexPtr(), (a.outerSize() + 1) * sizeof(int)) == 0;
}

}  // namespace

struct AdmmSolver::Workspace {
  SparseMatrix P, A;
  Vector R;
  Matrix U, V;
  LinearBackend backend = LinearBackend::Auto;
  std::unique_ptr<KktSystem> kkt;
  int factorizations = 0;
};

AdmmSolver::AdmmSolver(SolverSettings settings) : settings_(settings), ws_(std::make_unique<Workspace>()) {
  settings_.validate();
}
AdmmSolver::~AdmmSolver() = default;
AdmmSolver::AdmmSolver(AdmmSolver&&) noexcept = default;
AdmmSolver& AdmmSolver::operator=(AdmmSolver&&) noexcept = default;

int AdmmSolver::factorizations() const { return ws_->factorizations; }


SolveResult AdmmSolver::solve(const StructuredProgram& prog, const WarmStart* warm) {
  const auto& s = settings_;
  const int n = prog.dim();
  ConstraintSet cs = detail::stack_constraints(prog);
  const int m = cs.rows();

  SparseMatrix P = s.feasibility_only ? SparseMatrix(n, n) : SparseMatrix(2.0 * prog.H);
  P.makeCompressed();
  const Vector q = s.feasibility_only ? Vector::Zero(n) : prog.q;
  const double c = s.feasibility_only ? 0.0 : prog.c;

  LinearBackend backend = s.backend;
  if (backend == LinearBackend::Auto) backend = prog.structure ? LinearBackend::Structured : LinearBackend::Sparse;

  double rho = s.rho;
  Vector R = cs.penalties(rho, s.eq_rho_scale);

  auto& ws = *ws_;
  auto factor = [&]() {
    const bool reuse = ws.kkt && ws.backend == backend && same_sparse(ws.P, P) && same_sparse(ws.A, cs.A) &&
                       ws.R.size() == R.size() && ws.R == R;
    if (reuse) return;
    ws.P = P;
    ws.A = cs.A;
    ws.R = R;
    ws.backend = backend;
    if (backend == LinearBackend::Dense) {
      ws.kkt = std::make_unique<DenseKkt>(regularized(P, cs.A, R, s.sigma));
    } else if (backend == LinearBackend::Sparse) {
      ws.kkt = std::make_unique<SparseKkt>(regularized(P, cs.A, R, s.sigma));
    } else {
      SparseMatrix PB = P;
      Matrix U(n, 0), V(n, 0);
      if (prog.structure && !s.feasibility_only) {
        PB = 2.0 * prog.structure->HB;
        U = 2.0 * prog.structure->U;
        V = prog.structure->V;
      }
      ws.kkt = std::make_unique<StructuredKkt>(regularized(PB, cs.A, R, s.sigma), U, V);
    }
    ++ws.factorizations;
  };
  factor();

  Vector x = Vector::Zero(n), z = Vector::Zero(m), y = Vector::Zero(m);
  if (warm != nullptr && warm->z.size() == n) {
    x = warm->z;
    z = cs.A * x;
    cs.project(z);
    if (warm->y.size() == m) y = warm->y;
  }

  SolveResult res;
  res.backend = ws.kkt->name();
  res.linsolve_flops_per_iter = ws.kkt->solve_flops();
  res.iteration_flops = res.linsolve_flops_per_iter + detail::matvec_flops(P, cs.A);
  res.factor_flops = ws.kkt->factor_flops();

  detail::Residuals rr;
  bool have_residuals = false;
  int k = 0;
  for (k = 1; k <= s.max_iter; ++k) {
    const Vector rhs = s.sigma * x - q + cs.A.transpose() * (R.cwiseProduct(z) - y);
    const Vector xt = ws.kkt->solve(rhs);
    const Vector zt = cs.A * xt;
    const Vector x_new = s.alpha * xt + (1.0 - s.alpha) * x;
    const Vector zr = s.alpha * zt + (1.0 - s.alpha) * z;
    Vector z_new = zr + y.cwiseQuotient(R);
    cs.project(z_new);
    const Vector y_new = y + R.cwiseProduct(zr - z_new);
    const Vector dx = x_new - x;
    const Vector dy = y_new - y;
    x = x_new;
    z = std::move(z_new);
    y = y_new;

    const bool check = (k % s.check_interval == 0) || k == s.max_iter;
    if (check || s.record_history) {
      rr = detail::compute_residuals(P, q, cs, x, z, y, s);
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
      const auto a = detail::compute_residuals(P, q, cs, x, z, y, s);
      const double pn = a.primal / std::max(a.primal_scale, 1e-30);
      const double dn = a.dual / std::max(a.dual_scale, 1e-30);
      if (pn > 0.0 && dn > 0.0) {
        const double rho_new = std::clamp(rho * std::sqrt(pn / dn), 1e-6, 1e6);
        if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
          rho = rho_new;
          R = cs.penalties(rho, s.eq_rho_scale);
          factor();
        }
      }
    }
  }
  res.iterations = std::min(k, s.max_iter);
  if (!have_residuals) rr = detail::compute_residuals(P, q, cs, x, z, y, s);

  const bool qp = prog.cones.empty();
  if (s.polish && qp && (res.status == SolveStatus::Solved || res.status == SolveStatus::MaxIter)) {
    if (detail::refine_by_polish(P, q, cs, s, x, z, y, rr)) {
      res.polished = true;
      if (rr.primal <= rr.eps_primal && rr.dual <= rr.eps_dual) res.status = SolveStatus::Solved;
    }
  }

  res.z = x;
  res.y = y;
  res.primal_residual = rr.primal;
  res.dual_residual = rr.dual;
  res.objective = prog.objective(x);
  if (s.feasibility_only) res.objective = 0.0;
  // Infeasibility verdicts carry the last iterate; residuals describe it.
  return res;
}

SolveResult admm_qp(const StructuredProgram& prog, const SolverSettings& settings) {
  if (prog.kind != ProgramKind::QP || !prog.cones.empty())
    throw std::invalid_argument("admm_qp: program is not a QP");
  return AdmmSolver(settings).solve(prog);
}

SolveResult admm_socp(const StructuredProgram& prog, const SolverSettings& settings) {
  return AdmmSolver(settings).solve(prog);
}

}  // namespace mpct
