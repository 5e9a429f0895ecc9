#include "mpct/design.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mpct/sampling.hpp"

namespace mpct {
namespace {

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(M), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& M) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(M), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix riccati_update(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& P) {
  const Matrix BtPA = B.transpose() * P * A;
  const Matrix S = R + B.transpose() * P * B;
  return symmetrize(A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q);
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P) {
  const Matrix S = R + B.transpose() * P * B;
  return -S.ldlt().solve(B.transpose() * P * A);
}

ValidationCheck make_check(std::string name, bool passed, double margin, std::string detail = {}) {
  return ValidationCheck{std::move(name), passed, margin, std::move(detail)};
}

}  // namespace

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& P) {
  return (riccati_update(A, B, Q, R, P) - P).cwiseAbs().maxCoeff();
}

LqrResult dare_lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double tol, int max_iter) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw DimensionError("dare_lqr: dimension mismatch");
  if (min_eigenvalue(R) <= 0.0) throw std::invalid_argument("dare_lqr: R must be positive definite");

  Matrix Ak = A;
  Matrix Gk = symmetrize(B * R.ldlt().solve(B.transpose()));
  Matrix Hk = symmetrize(Q);
  const Matrix I = Matrix::Identity(n, n);
  int iter = 0;
  bool settled = false;
  for (; iter < max_iter; ++iter) {
    const Eigen::PartialPivLU<Matrix> W(I + Gk * Hk);
    const Matrix V1 = W.solve(Ak);
    const Matrix V2 = W.solve(Gk);
    const Matrix Hn = symmetrize(Hk + V1.transpose() * Hk * Ak);
    Gk = symmetrize(Gk + Ak * V2 * Ak.transpose());
    Ak = Ak * V1;
    if (!Hn.allFinite()) throw NoStabilizingSolutionError("dare_lqr: doubling iteration diverged");
    const double change = (Hn - Hk).cwiseAbs().maxCoeff();
    Hk = Hn;
    if (change <= tol * std::max(1.0, Hk.cwiseAbs().maxCoeff())) {
      settled = true;
      ++iter;
      break;
    }
  }
  if (!settled) throw NoStabilizingSolutionError("dare_lqr: doubling iteration did not converge");
  Matrix P = Hk;
  for (int k = 0; k < 3; ++k) P = riccati_update(A, B, Q, R, P);
  LqrResult out;
  out.P = P;
  out.K = lqr_gain(A, B, R, P);
  out.iterations = iter;
  out.residual = dare_residual(A, B, Q, R, P);
  if (!out.P.allFinite() || spectral_radius(A + B * out.K) >= 1.0)
    throw NoStabilizingSolutionError("dare_lqr: closed loop is not Schur");
  if (out.residual > 1e-6 * std::max(1.0, P.cwiseAbs().maxCoeff()))
    throw NoStabilizingSolutionError("dare_lqr: Riccati residual stalled");
  return out;
}

Matrix lyapunov_terminal_cost(const Matrix& A, const Matrix& B, const Matrix& K, const Matrix& Q, const Matrix& R) {
  const Matrix Acl = A + B * K;
  if (spectral_radius(Acl) >= 1.0) throw NotSchurError("lyapunov_terminal_cost: A + BK is not Schur");
  const auto n = Acl.rows();
  const Matrix Qe = Q + K.transpose() * R * K;
  Matrix L = Matrix::Identity(n * n, n * n);
  // vec(Acl' P Acl) = (Acl' kron Acl') vec(P) in column-major order.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) L.block(i * n, j * n, n, n) -= Acl(j, i) * Acl.transpose();
  const Vector vecQ = Eigen::Map<const Vector>(Qe.data(), n * n);
  const Vector vecP = L.fullPivLu().solve(vecQ);
  return symmetrize(Eigen::Map<const Matrix>(vecP.data(), n, n));
}

TrackingDesign make_design(const LinearSystem& sys, const Matrix& Q, const Matrix& R, int N, double sigma) {
  TrackingDesign d;
  d.Q = Q;
  d.R = R;
  const auto lqr = dare_lqr(sys.A(), sys.B(), Q, R);
  d.P = lqr.P;
  d.K = lqr.K;
  d.Kbar = lqr.K;
  d.N = N;
  d.sigma = sigma;
  d.S = Matrix::Identity(sys.ny(), sys.ny());
  d.T = Matrix::Identity(sys.nx(), sys.nx());
  d.Su = Matrix::Identity(sys.nu(), sys.nu());
  d.Th = Matrix::Identity(sys.nx(), sys.nx());
  d.Sh = Matrix::Identity(sys.nu(), sys.nu());
  return d;
}

bool ValidationReport::certified() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double observability_margin(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  const Matrix Qh = psd_sqrt(Q);
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Matrix>(A, false).eigenvalues();
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < eig.size(); ++k) {
    Eigen::MatrixXcd M(2 * n, n);
    M.topRows(n) = A.cast<std::complex<double>>() - eig(k) * Eigen::MatrixXcd::Identity(n, n);
    M.bottomRows(n) = Qh.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    margin = std::min(margin, svd.singularValues()(n - 1));
  }
  return margin;
}

double sampled_tracking_invariance(const LinearSystem& sys, const Matrix& K, const Polytope& Z, const Polytope& Xt,
                                   int samples, std::uint64_t seed) {
  const int nx = sys.nx(), nu = sys.nu();
  double worst = -std::numeric_limits<double>::infinity();
  for (const Vector& p : hit_and_run(Xt, samples, seed)) {
    const Vector x = p.head(nx), xa = p.segment(nx, nx), ua = p.tail(nu);
    const Vector u = K * (x - xa) + ua;
    Vector z(nx + nu);
    z << x, u;
    worst = std::max(worst, Z.violation(z));
    Vector next(2 * nx + nu);
    next << sys.step(x, u), xa, ua;
    worst = std::max(worst, Xt.violation(next));
  }
  return worst;
}

ValidationReport validate_assumption1(const LinearSystem& sys, const TrackingDesign& design, const Polytope& Z,
                                      const InvariantSetReport* Xt, const ValidationOptions& options) {
  ValidationReport rep;
  const double obs = observability_margin(sys.A(), design.Q);
  rep.checks.push_back(make_check("observability", obs > 1e-9, obs, "smallest PBH singular value"));

  const int nu_idx = sys.controllability_index();
  std::ostringstream horizon;
  horizon << "N = " << design.N << ", controllability index = " << nu_idx;
  rep.checks.push_back(make_check("horizon", design.N >= nu_idx, design.N - nu_idx, horizon.str()));

  const Matrix Acl = sys.A() + sys.B() * design.K;
  const double rho = spectral_radius(Acl);
  rep.checks.push_back(make_check("schur_gain", rho < 1.0, 1.0 - rho, "1 - spectral radius of A + BK"));

  const Matrix lyap =
      Acl.transpose() * design.P * Acl - design.P + design.Q + design.K.transpose() * design.R * design.K;
  const double lam = max_eigenvalue(lyap);
  rep.checks.push_back(make_check("lyapunov", lam <= options.tol, -lam, "largest eigenvalue of the decrease residual"));

  if (Xt == nullptr) {
    rep.checks.push_back(make_check("terminal_invariance", false, -std::numeric_limits<double>::infinity(),
                                    "no invariant set for tracking supplied"));
  } else if (!Xt->converged) {
    rep.checks.push_back(make_check("terminal_invariance", false, -std::numeric_limits<double>::infinity(),
                                    "invariant set recursion did not converge"));
  } else {
    const double worst = sampled_tracking_invariance(sys, design.K, Z, Xt->set, options.samples, options.seed);
    rep.checks.push_back(make_check("terminal_invariance", worst <= options.tol, -worst,
                                    "largest constraint or invariance violation over samples"));
  }

  const double smin = min_eigenvalue(design.S);
  rep.checks.push_back(make_check("offset_cost", smin > 0.0, smin, "smallest eigenvalue of S"));
  return rep;
}

ValidationReport validate_assumption2(const LinearSystem& sys, const TrackingDesign& design, const Zonotope& W,
                                      const Zonotope& phi, const Polytope& Zbar, const InvariantSetReport* Xt_bar,
                                      const ValidationOptions& options) {
  ValidationReport rep;
  const double obs = observability_margin(sys.A(), design.Q);
  rep.checks.push_back(make_check("observability", obs > 1e-9, obs, "smallest PBH singular value"));
  const double rmin = min_eigenvalue(design.R);
  rep.checks.push_back(make_check("input_weight", rmin > 0.0, rmin, "smallest eigenvalue of R"));
  const double smin = min_eigenvalue(design.S);
  rep.checks.push_back(make_check("offset_cost", smin > 0.0, smin, "smallest eigenvalue of S"));

  const Matrix AK = sys.A() + sys.B() * design.K;
  const Matrix AKbar = sys.A() + sys.B() * design.Kbar;
  const double rho = spectral_radius(AK), rhobar = spectral_radius(AKbar);
  rep.checks.push_back(make_check("schur_gain", rho < 1.0, 1.0 - rho, "1 - spectral radius of A + BK"));
  rep.checks.push_back(make_check("schur_terminal_gain", rhobar < 1.0, 1.0 - rhobar, "1 - spectral radius of A + BKbar"));

  std::mt19937_64 rng(options.seed);
  bool rpi_ok = true;
  for (int i = 0; i < options.samples && rpi_ok; ++i) {
    const Vector e = phi.sample_extreme(rng);
    const Vector w = W.sample_extreme(rng);
    rpi_ok = phi.contains(AK * e + w, options.tol);
  }
  rep.checks.push_back(make_check("rpi_containment", rpi_ok, rpi_ok ? 0.0 : -1.0, "A_K e + w in phi on extreme samples"));

  const bool nonempty = !Zbar.is_empty();
  rep.checks.push_back(make_check("tightened_nonempty", nonempty, nonempty ? 0.0 : -1.0));

  const Matrix lyap = design.P - AKbar.transpose() * design.P * AKbar - design.Q -
                      design.Kbar.transpose() * design.R * design.Kbar;
  const double res = lyap.cwiseAbs().maxCoeff();
  rep.checks.push_back(make_check("lyapunov_equation", res <= 1e-8 * std::max(1.0, design.P.cwiseAbs().maxCoeff()),
                                  -res, "residual of the terminal Lyapunov equation"));

  if (Xt_bar == nullptr || !Xt_bar->converged) {
    rep.checks.push_back(make_check("terminal_invariance", false, -std::numeric_limits<double>::infinity(),
                                    "tightened invariant set for tracking unavailable"));
  } else {
    const double worst =
        sampled_tracking_invariance(sys, design.Kbar, Zbar, Xt_bar->set, options.samples, options.seed);
    rep.checks.push_back(make_check("terminal_invariance", worst <= options.tol, -worst,
                                    "largest constraint or invariance violation over samples"));
  }
  return rep;
}

}  // namespace mpct
