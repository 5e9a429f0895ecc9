#include "mpct/setops.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "mpct/lp.hpp"

namespace mpct {
namespace {

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), std::max(a.cols(), b.cols()));
  if (a.rows() > 0) out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.bottomRows(b.rows()) = b;
  return out;
}

Vector vcat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

InvariantSetReport max_invariant_set(const Matrix& A_cl, const Polytope& G, const InvariantSetOptions& options) {
  if (A_cl.rows() != A_cl.cols() || A_cl.rows() != G.dim())
    throw DimensionError("max_invariant_set: A_cl must be square and match G");
  int removed = 0;
  Polytope omega = G.without_equalities().remove_redundant(options.redundancy_tol, &removed);
  Matrix F = omega.F();
  Vector g = omega.g();
  Matrix frontier_F = F;
  Vector frontier_g = g;

  InvariantSetReport report;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Matrix cand_F = frontier_F * A_cl;
    Matrix new_F(0, F.cols());
    Vector new_g(0);
    for (int i = 0; i < cand_F.rows(); ++i) {
      const Vector f = cand_F.row(i).transpose();
      const double scale = f.norm();
      if (scale < 1e-12) {
        if (frontier_g(i) < -options.redundancy_tol) throw EmptySetError("max_invariant_set: empty invariant set");
        continue;
      }
      const auto lp = lp::maximize(f, F, g, Matrix(0, F.cols()), Vector(0));
      if (lp.status == lp::LpStatus::Infeasible) throw EmptySetError("max_invariant_set: empty invariant set");
      if (lp.status == lp::LpStatus::Optimal && lp.value <= frontier_g(i) + options.redundancy_tol * scale) continue;
      F.conservativeResize(F.rows() + 1, Eigen::NoChange);
      F.bottomRows(1) = f.transpose();
      g.conservativeResize(g.size() + 1);
      g(g.size() - 1) = frontier_g(i);
      new_F = vstack(new_F, f.transpose());
      new_g = vcat(new_g, frontier_g.segment(i, 1));
    }
    report.iterations = iter;
    if (new_F.rows() == 0) {
      int dropped = 0;
      report.set = Polytope(F, g).remove_redundant(options.redundancy_tol, &dropped);
      report.removed_redundant = removed + dropped;
      report.converged = true;
      if (report.set.is_empty()) throw EmptySetError("max_invariant_set: empty invariant set");
      return report;
    }
    frontier_F = new_F;
    frontier_g = new_g;
  }
  report.set = Polytope(F, g);
  report.removed_redundant = removed;
  report.converged = false;
  throw NotConvergedError("max_invariant_set: iteration cap reached", report);
}

InvariantSetReport invariant_set_for_tracking(const LinearSystem& sys, const Matrix& K, const Polytope& Z,
                                              double sigma, const InvariantSetOptions& options) {
  const int nx = sys.nx(), nu = sys.nu();
  if (K.rows() != nu || K.cols() != nx) throw DimensionError("invariant_set_for_tracking: K must be nu x nx");
  if (Z.dim() != nx + nu) throw DimensionError("invariant_set_for_tracking: Z must live in (x, u) space");
  if (!(sigma >= 0.0 && sigma < 1.0)) throw std::invalid_argument("invariant_set_for_tracking: sigma must lie in [0, 1)");
  const Matrix Acl = sys.A() + sys.B() * K;
  if (spectral_radius(Acl) >= 1.0) throw NotSchurError("invariant_set_for_tracking: A + BK is not Schur");

  Matrix Ess(nx, nx + nu);
  Ess << sys.A() - Matrix::Identity(nx, nx), sys.B();
  const Matrix M = null_space(Ess);
  const int nt = static_cast<int>(M.cols());
  const Matrix Mx = M.topRows(nx);
  const Matrix Mu = M.bottomRows(nu);
  const Matrix Lt = Mu - K * Mx;

  Matrix Aext = Matrix::Zero(nx + nt, nx + nt);
  Aext.topLeftCorner(nx, nx) = Acl;
  Aext.topRightCorner(nx, nt) = sys.B() * Lt;
  Aext.bottomRightCorner(nt, nt).setIdentity();

  const Polytope Zi = Z.without_equalities();
  Matrix Sx = Matrix::Zero(nx + nu, nx + nt);  // (x, u) as a function of (x, theta)
  Sx.topLeftCorner(nx, nx).setIdentity();
  Sx.block(nx, 0, nu, nx) = K;
  Sx.block(nx, nx, nu, nt) = Lt;
  Matrix St = Matrix::Zero(nx + nu, nx + nt);  // (xa, ua) as a function of theta
  St.rightCols(nt) = M;
  const Matrix G_F = vstack(Zi.F() * Sx, Zi.F() * St);
  const Vector G_g = vcat(Zi.g(), sigma * Zi.g());

  // Drop rows that vanish identically (for instance when nt = 0).
  std::vector<int> keep;
  for (int i = 0; i < G_F.rows(); ++i) {
    if (G_F.row(i).norm() > 1e-12) {
      keep.push_back(i);
    } else if (G_g(i) < 0.0) {
      throw EmptySetError("invariant_set_for_tracking: constraints exclude the origin");
    }
  }
  Matrix GF(static_cast<Eigen::Index>(keep.size()), nx + nt);
  Vector Gg(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    GF.row(j) = G_F.row(keep[j]);
    Gg(j) = G_g(keep[j]);
  }

  InvariantSetReport ext;
  try {
    ext = max_invariant_set(Aext, Polytope(GF, Gg), options);
  } catch (const NotConvergedError& e) {
    InvariantSetReport partial = e.report();
    const Polytope& S = partial.set;
    Matrix F(S.num_ineq(), 2 * nx + nu);
    F << S.F().leftCols(nx), S.F().rightCols(nt) * M.transpose();
    Matrix Feq(nx, 2 * nx + nu);
    Feq << Matrix::Zero(nx, nx), Ess;
    partial.set = Polytope(F, S.g(), Feq, Vector::Zero(nx));
    throw NotConvergedError(e.what(), partial);
  }
  const Polytope& S = ext.set;
  Matrix F(S.num_ineq(), 2 * nx + nu);
  F << S.F().leftCols(nx), S.F().rightCols(nt) * M.transpose();
  Matrix Feq(nx, 2 * nx + nu);
  Feq << Matrix::Zero(nx, nx), Ess;
  ext.set = Polytope(F, S.g(), Feq, Vector::Zero(nx));
  return ext;
}

InvariantSetReport terminal_set_for_regulation(const LinearSystem& sys, const Matrix& K, const Polytope& Z,
                                               const Vector& xr, const Vector& ur,
                                               const InvariantSetOptions& options) {
  const int nx = sys.nx(), nu = sys.nu();
  if (Z.dim() != nx + nu) throw DimensionError("terminal_set_for_regulation: Z must live in (x, u) space");
  const Matrix Acl = sys.A() + sys.B() * K;
  if (spectral_radius(Acl) >= 1.0) throw NotSchurError("terminal_set_for_regulation: A + BK is not Schur");
  const Polytope Zi = Z.without_equalities();
  Matrix S(nx + nu, nx);
  S << Matrix::Identity(nx, nx), K;
  Vector zr(nx + nu);
  zr << xr, ur;
  const Polytope G(Zi.F() * S, Zi.g() - Zi.F() * zr);
  InvariantSetReport rep = max_invariant_set(Acl, G, options);
  rep.set = Polytope(rep.set.F(), rep.set.g() + rep.set.F() * xr);
  return rep;
}

RpiApproximation rpi_outer_approx(const Matrix& A_K, const Zonotope& W, double eps_alpha, int max_s) {
  const int n = static_cast<int>(A_K.rows());
  if (A_K.cols() != n || W.dim() != n) throw DimensionError("rpi_outer_approx: dimension mismatch");
  if (!(eps_alpha > 0.0 && eps_alpha < 1.0)) throw std::invalid_argument("rpi_outer_approx: eps_alpha must lie in (0, 1)");
  if (spectral_radius(A_K) >= 1.0) throw NotSchurError("rpi_outer_approx: A_K is not Schur");
  const Zonotope Wc = W.compacted(1e-15);
  if (Wc.num_generators() == 0) {
    if (Wc.center().cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("rpi_outer_approx: W must contain the origin");
    return {Wc, 1, 0.0, 1.0};
  }
  Polytope Wp;
  try {
    Wp = Wc.to_polytope();
  } catch (const DimensionError&) {
    throw NoContainmentError("rpi_outer_approx: W is not full dimensional, so A^s W is never inside alpha W");
  }
  Vector hW(Wp.num_ineq());
  for (int i = 0; i < Wp.num_ineq(); ++i) {
    hW(i) = Wp.g()(i);
    if (hW(i) <= 1e-12) throw std::invalid_argument("rpi_outer_approx: origin must lie in the interior of W");
  }
  Matrix As = Matrix::Identity(n, n);
  for (int s = 1; s <= max_s; ++s) {
    As = A_K * As;
    double alpha = 0.0;
    for (int i = 0; i < Wp.num_ineq(); ++i)
      alpha = std::max(alpha, Wc.support(As.transpose() * Wp.F().row(i).transpose()) / hW(i));
    if (alpha <= eps_alpha) {
      Zonotope sum = Wc;
      Matrix Ai = Matrix::Identity(n, n);
      for (int i = 1; i < s; ++i) {
        Ai = A_K * Ai;
        sum = sum.minkowski_sum(Wc.linear_map(Ai));
      }
      const double scaling = 1.0 / (1.0 - alpha);
      return {sum.scaled(scaling).compacted(1e-15), s, alpha, scaling};
    }
  }
  throw NoContainmentError("rpi_outer_approx: no s up to the cap gives A^s W inside eps_alpha W");
}

Polytope tighten(const Polytope& Z, const Zonotope& phi, const Matrix& K) {
  const int nx = phi.dim();
  const int nu = static_cast<int>(K.rows());
  if (K.cols() != nx || Z.dim() != nx + nu) throw DimensionError("tighten: dimension mismatch");
  auto margin = [&](const Vector& f) {
    const Vector fx = f.head(nx);
    const Vector fu = f.tail(nu);
    double h = phi.support(fx);
    if (nu > 0 && fu.cwiseAbs().maxCoeff() > 0.0) h += phi.support(K.transpose() * fu);
    return h;
  };
  Vector g = Z.g();
  for (int i = 0; i < Z.num_ineq(); ++i) g(i) -= margin(Z.F().row(i).transpose());
  Vector geq = Z.geq();
  for (int i = 0; i < Z.num_eq(); ++i) {
    const Vector f = Z.Feq().row(i).transpose();
    if (margin(f) + margin(-f) > 1e-12)
      throw EmptyTightenedError("tighten: the tube does not fit inside an equality constraint");
    geq(i) -= margin(f);
  }
  Polytope out(Z.F(), g, Z.Feq(), geq);
  if (out.is_empty()) throw EmptyTightenedError("tighten: tightened constraint set is empty");
  return out;
}

}  // namespace mpct
