// Dense primal-dual interior-point method used as an independent oracle.
//
// Standard form: minimize 1/2 x'Px + q'x  s.t.  Gx + s = h, s in K, Ax = b,
// with K a product of a nonnegative orthant and second-order cones.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mpct/solver.hpp"

namespace mpct {
namespace {

struct ConeLayout {
  int orthant = 0;
  std::vector<int> soc;  // sizes of the second-order cones, in order
  int rows() const {
    int r = orthant;
    for (int k : soc) r += k;
    return r;
  }
  int degree() const { return orthant + static_cast<int>(soc.size()); }
};

template <typename Fn>
void for_each_soc(const ConeLayout& L, Fn&& fn) {
  int off = L.orthant;
  for (int k : L.soc) {
    fn(off, k);
    off += k;
  }
}

Vector identity_element(const ConeLayout& L) {
  Vector e = Vector::Zero(L.rows());
  e.head(L.orthant).setOnes();
  for_each_soc(L, [&](int off, int) { e(off) = 1.0; });
  return e;
}

Vector jordan_product(const ConeLayout& L, const Vector& u, const Vector& v) {
  Vector w(u.size());
  w.head(L.orthant) = u.head(L.orthant).cwiseProduct(v.head(L.orthant));
  for_each_soc(L, [&](int off, int k) {
    w(off) = u.segment(off, k).dot(v.segment(off, k));
    w.segment(off + 1, k - 1) = u(off) * v.segment(off + 1, k - 1) + v(off) * u.segment(off + 1, k - 1);
  });
  return w;
}

// x with lambda o x = w.
Vector jordan_divide(const ConeLayout& L, const Vector& lambda, const Vector& w) {
  Vector x(w.size());
  x.head(L.orthant) = w.head(L.orthant).cwiseQuotient(lambda.head(L.orthant));
  for_each_soc(L, [&](int off, int k) {
    const double l0 = lambda(off);
    const auto l1 = lambda.segment(off + 1, k - 1);
    const double w0 = w(off);
    const auto w1 = w.segment(off + 1, k - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * w0 - l1.dot(w1)) / det;
    x(off) = x0;
    x.segment(off + 1, k - 1) = (w1 - x0 * l1) / l0;
  });
  return x;
}

// Smallest "eigenvalue" of u with respect to the cone.
double min_eig(const ConeLayout& L, const Vector& u) {
  double m = std::numeric_limits<double>::infinity();
  if (L.orthant > 0) m = u.head(L.orthant).minCoeff();
  for_each_soc(L, [&](int off, int k) { m = std::min(m, u(off) - u.segment(off + 1, k - 1).norm()); });
  return m;
}

// Largest alpha such that u + alpha du stays in the cone (inf if unbounded).
double max_step(const ConeLayout& L, const Vector& u, const Vector& du) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.orthant; ++i)
    if (du(i) < 0.0) a = std::min(a, -u(i) / du(i));
  for_each_soc(L, [&](int off, int k) {
    const double u0 = u(off), d0 = du(off);
    const auto u1 = u.segment(off + 1, k - 1);
    const auto d1 = du.segment(off + 1, k - 1);
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = 2.0 * (u0 * d0 - u1.dot(d1));
    const double qc = std::max(u0 * u0 - u1.squaredNorm(), 0.0);
    double r = std::numeric_limits<double>::infinity();
    if (std::abs(qa) < 1e-300) {
      if (qb < 0.0) r = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double t = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        double r1 = t / qa, r2 = (t != 0.0) ? qc / t : std::numeric_limits<double>::infinity();
        if (r1 > r2) std::swap(r1, r2);
        if (qa > 0.0) {
          if (r1 > 0.0) r = r1;
        } else {
          r = r2 > 0.0 ? r2 : 0.0;
        }
      }
    }
    if (d0 < 0.0) r = std::min(r, -u0 / d0);
    a = std::min(a, std::max(r, 0.0));
  });
  return a;
}

struct Scaling {
  Matrix W, Winv;
  Vector lambda;
};

Scaling nt_scaling(const ConeLayout& L, const Vector& s, const Vector& z) {
  const int m = L.rows();
  Scaling sc;
  sc.W = Matrix::Zero(m, m);
  sc.Winv = Matrix::Zero(m, m);
  for (int i = 0; i < L.orthant; ++i) {
    const double w = std::sqrt(s(i) / z(i));
    sc.W(i, i) = w;
    sc.Winv(i, i) = 1.0 / w;
  }
  for_each_soc(L, [&](int off, int k) {
    const Vector sb = s.segment(off, k), zb = z.segment(off, k);
    const double ns = std::sqrt(std::max(sb(0) * sb(0) - sb.tail(k - 1).squaredNorm(), 1e-300));
    const double nz = std::sqrt(std::max(zb(0) * zb(0) - zb.tail(k - 1).squaredNorm(), 1e-300));
    const Vector sn = sb / ns, zn = zb / nz;
    const double gamma = std::sqrt(std::max(0.5 * (1.0 + sn.dot(zn)), 1e-300));
    Vector Jz = zn;
    Jz.tail(k - 1) *= -1.0;
    Vector v = (sn + Jz) / (2.0 * gamma);
    const double w0 = v(0);
    v(0) += 1.0;
    v /= std::sqrt(2.0 * (w0 + 1.0));
    const double beta = std::sqrt(ns / nz);
    Matrix J = Matrix::Identity(k, k);
    J.bottomRightCorner(k - 1, k - 1) *= -1.0;
    const Vector Jv = J * v;
    sc.W.block(off, off, k, k) = beta * (2.0 * v * v.transpose() - J);
    sc.Winv.block(off, off, k, k) = (2.0 * Jv * Jv.transpose() - J) / beta;
  });
  sc.lambda = sc.W * z;
  return sc;
}

}  // namespace

SolveResult dense_reference_solve(const StructuredProgram& prog, const ReferenceSolverOptions& opt) {
  const int n = prog.dim();
  if (n > 2000) throw std::invalid_argument("dense_reference_solve: problem too large");
  const Matrix P = 2.0 * Matrix(prog.H);
  const Vector& q = prog.q;
  const Matrix A = Matrix(prog.Aeq);
  const Vector& b = prog.beq;
  const int me = static_cast<int>(A.rows());

  ConeLayout L;
  L.orthant = static_cast<int>(prog.F.rows());
  for (const auto& k : prog.cones) L.soc.push_back(k.size());
  const int m = L.rows();
  Matrix G(m, n);
  Vector h(m);
  if (L.orthant > 0) {
    G.topRows(L.orthant) = Matrix(prog.F);
    h.head(L.orthant) = prog.g;
  }
  {
    int off = L.orthant;
    for (const auto& k : prog.cones) {
      G.middleRows(off, k.size()) = -Matrix(k.M);
      h.segment(off, k.size()) = k.b;
      off += k.size();
    }
  }

  // Solves [K11 A'; A 0][dx; dy] = [r1; r2] with light regularization and
  // iterative refinement.
  auto kkt_solve = [&](const Matrix& K11, const Vector& r1, const Vector& r2) {
    Matrix K(n + me, n + me);
    K.topLeftCorner(n, n) = K11;
    if (me > 0) {
      K.topRightCorner(n, me) = A.transpose();
      K.bottomLeftCorner(me, n) = A;
      K.bottomRightCorner(me, me).setZero();
    }
    Matrix Kreg = K;
    const double delta = 1e-13 * std::max(1.0, K11.cwiseAbs().maxCoeff());
    Kreg.topLeftCorner(n, n).diagonal().array() += delta;
    if (me > 0) Kreg.bottomRightCorner(me, me).diagonal().array() -= delta;
    const Eigen::PartialPivLU<Matrix> lu(Kreg);
    Vector rhs(n + me);
    rhs << r1, r2;
    Vector sol = lu.solve(rhs);
    for (int it = 0; it < 3; ++it) sol += lu.solve(rhs - K * sol);
    return sol;
  };

  SolveResult res;
  res.backend = "dense_ipm";
  Vector x, y, z, s;
  if (m == 0) {
    const Vector sol = kkt_solve(P, -q, b);
    x = sol.head(n);
    y = sol.tail(me);
    res.status = SolveStatus::Solved;
    res.iterations = 1;
    res.z = x;
    res.y = y;
    res.objective = prog.objective(x);
    res.primal_residual = me > 0 ? (A * x - b).cwiseAbs().maxCoeff() : 0.0;
    res.dual_residual = (P * x + q + A.transpose() * y).cwiseAbs().maxCoeff();
    return res;
  }

  // Initial point from the KKT system with identity scaling.
  {
    const Vector sol = kkt_solve(P + G.transpose() * G, -q + G.transpose() * h, b);
    x = sol.head(n);
    y = sol.tail(me);
    z = G * x - h;
    s = -z;
    const Vector e = identity_element(L);
    const double ts = -min_eig(L, s), tz = -min_eig(L, z);
    if (ts >= -1e-8 * std::max(1.0, s.cwiseAbs().maxCoeff())) s += (1.0 + std::max(ts, 0.0)) * e;
    if (tz >= -1e-8 * std::max(1.0, z.cwiseAbs().maxCoeff())) z += (1.0 + std::max(tz, 0.0)) * e;
  }

  const Vector e = identity_element(L);
  const double deg = L.degree();
  const double bscale = std::max({1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0, h.cwiseAbs().maxCoeff()});
  const double qscale = std::max(1.0, q.size() ? q.cwiseAbs().maxCoeff() : 0.0);

  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    Vector x, y, z;
    double pres = 0.0, dres = 0.0;
  } best;
  int stall = 0;
  int iter = 0;
  for (iter = 0; iter < opt.max_iter; ++iter) {
    const Vector rx = P * x + q + A.transpose() * y + G.transpose() * z;
    const Vector ry = me > 0 ? Vector(A * x - b) : Vector(0);
    const Vector rz = G * x + s - h;
    const double gap = s.dot(z);
    const double pcost = 0.5 * x.dot(P * x) + q.dot(x) + prog.c;
    const double pres = std::max(ry.size() ? ry.cwiseAbs().maxCoeff() : 0.0, rz.cwiseAbs().maxCoeff()) / bscale;
    const double dres = rx.cwiseAbs().maxCoeff() / qscale;
    res.primal_residual = pres * bscale;
    res.dual_residual = dres * qscale;
    if (pres <= opt.tol && dres <= opt.tol && gap <= opt.tol * std::max(1.0, std::abs(pcost))) {
      res.status = SolveStatus::Solved;
      break;
    }
    const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pcost))});
    if (merit < best.merit) {
      best = {merit, x, y, z, pres * bscale, dres * qscale};
      stall = 0;
    } else if (++stall >= 5) {
      break;
    }
    const double mu = gap / deg;

    const Scaling sc = nt_scaling(L, s, z);
    const Vector& lam = sc.lambda;
    // Scaled system in (dx, dy, W dz) keeps the (3,3) block at -I.
    const int nk = n + me + m;
    const Matrix Gs = sc.Winv * G;
    Matrix K = Matrix::Zero(nk, nk);
    K.topLeftCorner(n, n) = P;
    if (me > 0) {
      K.block(0, n, n, me) = A.transpose();
      K.block(n, 0, me, n) = A;
    }
    K.block(0, n + me, n, m) = Gs.transpose();
    K.block(n + me, 0, m, n) = Gs;
    K.bottomRightCorner(m, m) = -Matrix::Identity(m, m);
    Matrix Kreg = K;
    const double delta = 1e-13 * std::max(1.0, K.cwiseAbs().maxCoeff());
    Kreg.topLeftCorner(n, n).diagonal().array() += delta;
    Kreg.bottomRightCorner(me + m, me + m).diagonal().array() -= delta;
    const Eigen::PartialPivLU<Matrix> lu(Kreg);

    auto newton = [&](const Vector& d, Vector& dx, Vector& dy, Vector& dz, Vector& ds) {
      const Vector Wu = sc.W * jordan_divide(L, lam, d);
      Vector rhs(nk);
      rhs << -rx, -ry, sc.Winv * (-rz - Wu);
      Vector sol = lu.solve(rhs);
      for (int it = 0; it < 3; ++it) sol += lu.solve(rhs - K * sol);
      dx = sol.head(n);
      dy = sol.segment(n, me);
      dz = sc.Winv * sol.tail(m);
      ds = -rz - G * dx;
    };

    Vector dxa, dya, dza, dsa;
    newton(-jordan_product(L, lam, lam), dxa, dya, dza, dsa);
    const double alpha_a = std::min({1.0, max_step(L, s, dsa), max_step(L, z, dza)});
    const double sigma = std::pow(1.0 - alpha_a, 3);

    const Vector corr = jordan_product(L, sc.Winv * dsa, sc.W * dza);
    Vector dx, dy, dz, ds;
    newton(-jordan_product(L, lam, lam) - corr + sigma * mu * e, dx, dy, dz, ds);
    const double alpha = std::min({1.0, 0.99 * max_step(L, s, ds), 0.99 * max_step(L, z, dz)});
    if (!(alpha > 1e-14)) break;
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }
  res.iterations = iter;
  if (res.status != SolveStatus::Solved && best.merit < std::numeric_limits<double>::infinity()) {
    // Rounding limits the attainable accuracy; keep the best iterate seen.
    x = best.x;
    y = best.y;
    z = best.z;
    res.primal_residual = best.pres;
    res.dual_residual = best.dres;
    if (best.merit <= 100.0 * opt.tol) res.status = SolveStatus::Solved;
  }
  res.z = x;
  res.y.resize(me + m);
  res.y.head(me) = y;
  res.y.segment(me, L.orthant) = z.head(L.orthant);
  res.y.tail(m - L.orthant) = -z.tail(m - L.orthant);
  res.objective = prog.objective(x);
  return res;
}

}  // namespace mpct
