#include "mpct/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mpct/lp.hpp"

namespace mpct {
namespace {

int numerical_rank(const Matrix& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double threshold = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > threshold) ++r;
  return r;
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

Matrix empty_rows(int cols) { return Matrix(0, cols); }

}  // namespace

// ---------------------------------------------------------------- LinearSystem

int controllability_index(const Matrix& A, const Matrix& B, double tol) {
  const int nx = static_cast<int>(A.rows());
  if (nx == 0) return 0;
  Matrix ctrb(nx, 0);
  Matrix block = B;
  for (int k = 1; k <= nx; ++k) {
    Matrix next(nx, ctrb.cols() + block.cols());
    next << ctrb, block;
    ctrb = std::move(next);
    if (numerical_rank(ctrb, tol) == nx) return k;
    block = A * block;
  }
  return -1;
}

LinearSystem::LinearSystem(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  const auto nx = A_.rows();
  if (A_.cols() != nx || nx == 0) throw std::invalid_argument("LinearSystem: A must be square and nonempty");
  if (B_.rows() != nx || B_.cols() == 0) throw std::invalid_argument("LinearSystem: B must have nx rows");
  if (C_.cols() != nx) throw std::invalid_argument("LinearSystem: C must have nx columns");
  if (D_.rows() != C_.rows() || D_.cols() != B_.cols())
    throw std::invalid_argument("LinearSystem: D must be ny x nu");
  if (!all_finite(A_) || !all_finite(B_) || !all_finite(C_) || !all_finite(D_))
    throw std::invalid_argument("LinearSystem: non-finite entries");
  controllability_index_ = mpct::controllability_index(A_, B_);
  if (controllability_index_ < 0) throw std::invalid_argument("LinearSystem: (A, B) is not controllable");
}

Matrix LinearSystem::output_map() const {
  Matrix M(ny(), nx() + nu());
  M << C_, D_;
  return M;
}

// -------------------------------------------------------------------- Polytope

Polytope::Polytope(Matrix F, Vector g, Matrix Feq, Vector geq)
    : F_(std::move(F)), g_(std::move(g)), Feq_(std::move(Feq)), geq_(std::move(geq)) {
  dim_ = static_cast<int>(F_.rows() > 0 || F_.cols() > 0 ? F_.cols() : Feq_.cols());
  if (F_.rows() == 0) F_ = empty_rows(dim_);
  if (Feq_.rows() == 0) Feq_ = empty_rows(dim_);
  if (g_.size() != F_.rows()) throw std::invalid_argument("Polytope: g size does not match F rows");
  if (geq_.size() != Feq_.rows()) throw std::invalid_argument("Polytope: geq size does not match Feq rows");
  if (Feq_.cols() != dim_) throw std::invalid_argument("Polytope: Feq column count mismatch");
  if (!F_.allFinite() || !g_.allFinite() || !Feq_.allFinite() || !geq_.allFinite())
    throw std::invalid_argument("Polytope: non-finite entries");
  for (int i = 0; i < F_.rows(); ++i)
    if (F_.row(i).squaredNorm() == 0.0) throw std::invalid_argument("Polytope: zero row in F");
}

Polytope Polytope::box(const Vector& lower, const Vector& upper) {
  const auto d = lower.size();
  if (upper.size() != d) throw std::invalid_argument("Polytope::box: bound size mismatch");
  std::vector<std::pair<int, double>> rows;  // (signed axis, bound)
  Matrix F = Matrix::Zero(2 * d, d);
  Vector g(2 * d);
  int r = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::isfinite(upper(i))) {
      F(r, i) = 1.0;
      g(r++) = upper(i);
    }
    if (std::isfinite(lower(i))) {
      F(r, i) = -1.0;
      g(r++) = -lower(i);
    }
  }
  return Polytope(F.topRows(r), g.head(r), Matrix(0, d), Vector(0));
}

Polytope Polytope::universe(int dim) { return Polytope(Matrix(0, dim), Vector(0), Matrix(0, dim), Vector(0)); }

double Polytope::violation(const Vector& z) const {
  double v = -std::numeric_limits<double>::infinity();
  if (num_ineq() > 0) v = (F_ * z - g_).maxCoeff();
  if (num_eq() > 0) v = std::max(v, (Feq_ * z - geq_).cwiseAbs().maxCoeff());
  return v;
}

bool Polytope::contains(const Vector& z, double tol) const {
  if (z.size() != dim_) throw DimensionError("Polytope::contains: dimension mismatch");
  return violation(z) <= tol;
}

double Polytope::support(const Vector& q) const {
  const auto r = lp::maximize(q, F_, g_, Feq_, geq_);
  if (r.status == lp::LpStatus::Infeasible) throw EmptySetError("Polytope::support: empty set");
  if (r.status == lp::LpStatus::Unbounded) return std::numeric_limits<double>::infinity();
  return r.value;
}

Vector Polytope::support_point(const Vector& q) const {
  const auto r = lp::maximize(q, F_, g_, Feq_, geq_);
  if (r.status == lp::LpStatus::Infeasible) throw EmptySetError("Polytope::support_point: empty set");
  if (r.status == lp::LpStatus::Unbounded) throw UnboundedError("Polytope::support_point: unbounded direction");
  return r.z;
}

bool Polytope::is_empty() const {
  return lp::find_feasible(F_, g_, Feq_, geq_).status == lp::LpStatus::Infeasible;
}

Polytope::ChebyshevBall Polytope::chebyshev_ball(double cap) const {
  Vector zp = Vector::Zero(dim_);
  Matrix basis = Matrix::Identity(dim_, dim_);
  if (has_equalities()) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Feq_);
    zp = cod.solve(geq_);
    if ((Feq_ * zp - geq_).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + geq_.cwiseAbs().maxCoeff()))
      throw EmptySetError("Polytope::chebyshev_ball: inconsistent equalities");
    basis = null_space(Feq_);
  }
  const int k = static_cast<int>(basis.cols());
  const Matrix Fr = F_ * basis;
  const Vector gr = g_ - F_ * zp;
  if (k == 0) {
    if (num_ineq() > 0 && gr.minCoeff() < -1e-9) throw EmptySetError("Polytope::chebyshev_ball: empty set");
    return {zp, 0.0};
  }
  // Variables (theta, r): maximize r s.t. Fr theta + |Fr_i| r <= gr, r <= cap.
  std::vector<int> rows;
  for (int i = 0; i < Fr.rows(); ++i) {
    if (Fr.row(i).norm() > 1e-12) {
      rows.push_back(i);
    } else if (gr(i) < -1e-9) {
      throw EmptySetError("Polytope::chebyshev_ball: empty set");
    }
  }
  Matrix A(static_cast<Eigen::Index>(rows.size()) + 1, k + 1);
  Vector b(static_cast<Eigen::Index>(rows.size()) + 1);
  for (size_t j = 0; j < rows.size(); ++j) {
    A.row(j).head(k) = Fr.row(rows[j]);
    A(j, k) = Fr.row(rows[j]).norm();
    b(j) = gr(rows[j]);
  }
  A.row(rows.size()).setZero();
  A(rows.size(), k) = 1.0;
  b(rows.size()) = cap;
  Vector c = Vector::Zero(k + 1);
  c(k) = 1.0;
  const auto r = lp::maximize(c, A, b, Matrix(0, k + 1), Vector(0));
  if (r.status != lp::LpStatus::Optimal || r.z(k) < -1e-9)
    throw EmptySetError("Polytope::chebyshev_ball: empty set");
  return {zp + basis * r.z.head(k), std::max(r.z(k), 0.0)};
}

bool Polytope::has_interior(double tol) const {
  try {
    return chebyshev_ball().radius > tol;
  } catch (const EmptySetError&) {
    return false;
  }
}

Polytope Polytope::intersect(const Polytope& other) const {
  if (other.dim_ != dim_) throw DimensionError("Polytope::intersect: dimension mismatch");
  Matrix F(num_ineq() + other.num_ineq(), dim_);
  F << F_, other.F_;
  Vector g(F.rows());
  g << g_, other.g_;
  Matrix Feq(num_eq() + other.num_eq(), dim_);
  Feq << Feq_, other.Feq_;
  Vector geq(Feq.rows());
  geq << geq_, other.geq_;
  return Polytope(F, g, Feq, geq);
}

Polytope Polytope::scaled(double s) const {
  if (s < 0.0) throw std::invalid_argument("Polytope::scaled: negative factor");
  return Polytope(F_, s * g_, Feq_, s * geq_);
}

Polytope Polytope::preimage(const Matrix& M, const Vector& b) const {
  if (M.rows() != dim_ || b.size() != dim_) throw DimensionError("Polytope::preimage: dimension mismatch");
  const int d = static_cast<int>(M.cols());
  Matrix F = F_ * M;
  Vector g = g_ - F_ * b;
  // Rows that vanish under M are either always satisfied or make the set empty.
  std::vector<int> keep;
  for (int i = 0; i < F.rows(); ++i) {
    if (F.row(i).norm() > 1e-14) {
      keep.push_back(i);
    } else if (g(i) < -1e-12) {
      throw EmptySetError("Polytope::preimage: empty set");
    }
  }
  Matrix Fk(static_cast<Eigen::Index>(keep.size()), d);
  Vector gk(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    Fk.row(j) = F.row(keep[j]);
    gk(j) = g(keep[j]);
  }
  return Polytope(Fk, gk, Feq_ * M, geq_ - Feq_ * b);
}

Polytope Polytope::without_equalities() const {
  if (!has_equalities()) return *this;
  Matrix F(num_ineq() + 2 * num_eq(), dim_);
  F << F_, Feq_, -Feq_;
  Vector g(F.rows());
  g << g_, geq_, -geq_;
  return Polytope(F, g);
}

Polytope Polytope::remove_redundant(double tol, int* removed) const {
  std::vector<bool> active(num_ineq(), true);
  int dropped = 0;
  for (int i = 0; i < num_ineq(); ++i) {
    int count = 0;
    for (int j = 0; j < num_ineq(); ++j)
      if (active[j] && j != i) ++count;
    Matrix F(count + 1, dim_);
    Vector g(count + 1);
    int r = 0;
    for (int j = 0; j < num_ineq(); ++j) {
      if (!active[j] || j == i) continue;
      F.row(r) = F_.row(j);
      g(r++) = g_(j);
    }
    const double scale = F_.row(i).norm();
    F.row(r) = F_.row(i);
    g(r) = g_(i) + scale;
    const auto res = lp::maximize(F_.row(i).transpose(), F, g, Feq_, geq_);
    if (res.status == lp::LpStatus::Infeasible) throw EmptySetError("Polytope::remove_redundant: empty set");
    if (res.status == lp::LpStatus::Optimal && res.value <= g_(i) + tol * scale) {
      active[i] = false;
      ++dropped;
    }
  }
  Matrix F(num_ineq() - dropped, dim_);
  Vector g(F.rows());
  int r = 0;
  for (int i = 0; i < num_ineq(); ++i) {
    if (!active[i]) continue;
    F.row(r) = F_.row(i);
    g(r++) = g_(i);
  }
  if (removed != nullptr) *removed = dropped;
  return Polytope(F, g, Feq_, geq_);
}

// -------------------------------------------------------------------- Zonotope

Zonotope::Zonotope(Vector center, Matrix generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.cols() == 0) generators_ = Matrix(center_.size(), 0);
  if (generators_.rows() != center_.size()) throw std::invalid_argument("Zonotope: generator dimension mismatch");
  if (!center_.allFinite() || !generators_.allFinite()) throw std::invalid_argument("Zonotope: non-finite entries");
}

Zonotope Zonotope::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("Zonotope::box: bound size mismatch");
  const Vector c = 0.5 * (lower + upper);
  const Vector h = 0.5 * (upper - lower);
  if ((h.array() < 0.0).any()) throw std::invalid_argument("Zonotope::box: lower > upper");
  return Zonotope(c, Matrix(h.asDiagonal())).compacted();
}

Zonotope Zonotope::point(const Vector& p) { return Zonotope(p, Matrix(p.size(), 0)); }

double Zonotope::support(const Vector& q) const {
  return q.dot(center_) + (generators_.transpose() * q).cwiseAbs().sum();
}

bool Zonotope::is_point(double tol) const {
  return generators_.cols() == 0 || generators_.cwiseAbs().maxCoeff() <= tol;
}

Zonotope Zonotope::linear_map(const Matrix& M) const { return Zonotope(M * center_, M * generators_); }

Zonotope Zonotope::minkowski_sum(const Zonotope& other) const {
  if (other.dim() != dim()) throw DimensionError("Zonotope::minkowski_sum: dimension mismatch");
  Matrix G(dim(), num_generators() + other.num_generators());
  G << generators_, other.generators_;
  return Zonotope(center_ + other.center_, G);
}

Zonotope Zonotope::scaled(double s) const { return Zonotope(s * center_, s * generators_); }

Zonotope Zonotope::compacted(double tol) const {
  std::vector<int> keep;
  for (int j = 0; j < num_generators(); ++j)
    if (generators_.col(j).cwiseAbs().maxCoeff() > tol) keep.push_back(j);
  Matrix G(dim(), static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) G.col(k) = generators_.col(keep[k]);
  return Zonotope(center_, G);
}

bool Zonotope::contains(const Vector& z, double tol) const {
  if (z.size() != dim()) throw DimensionError("Zonotope::contains: dimension mismatch");
  const int p = num_generators();
  if (p == 0) return (z - center_).cwiseAbs().maxCoeff() <= tol;
  Matrix F(2 * p, p);
  F << Matrix::Identity(p, p), -Matrix::Identity(p, p);
  const Vector g = Vector::Constant(2 * p, 1.0 + tol);
  return lp::find_feasible(F, g, generators_, z - center_).status == lp::LpStatus::Optimal;
}

Polytope Zonotope::to_polytope() const {
  const Zonotope z = compacted(1e-14);
  const int d = dim();
  const Matrix& G = z.generators();
  if (numerical_rank(G, 1e-10) < d) throw DimensionError("Zonotope::to_polytope: zonotope is not full dimensional");
  std::vector<Vector> normals;
  auto add_normal = [&](Vector n) {
    n.normalize();
    for (Eigen::Index i = 0; i < n.size(); ++i) {
      if (std::abs(n(i)) > 1e-12) {
        if (n(i) < 0) n = -n;
        break;
      }
    }
    for (const auto& m : normals)
      if ((m - n).cwiseAbs().maxCoeff() < 1e-10) return;
    normals.push_back(n);
  };
  if (d == 1) {
    add_normal(Vector::Ones(1));
  } else {
    const int p = z.num_generators();
    std::vector<int> idx(d - 1);
    for (int i = 0; i < d - 1; ++i) idx[i] = i;
    while (true) {
      Matrix S(d - 1, d);
      for (int i = 0; i < d - 1; ++i) S.row(i) = G.col(idx[i]).transpose();
      const Matrix N = null_space(S, 1e-12);
      if (N.cols() == 1) add_normal(N.col(0));
      int k = d - 2;
      while (k >= 0 && idx[k] == p - (d - 1) + k) --k;
      if (k < 0) break;
      ++idx[k];
      for (int i = k + 1; i < d - 1; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  Matrix F(2 * normals.size(), d);
  Vector g(2 * normals.size());
  for (size_t i = 0; i < normals.size(); ++i) {
    F.row(2 * i) = normals[i].transpose();
    g(2 * i) = z.support(normals[i]);
    F.row(2 * i + 1) = -normals[i].transpose();
    g(2 * i + 1) = z.support(-normals[i]);
  }
  return Polytope(F, g);
}

Vector Zonotope::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector xi(num_generators());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = dist(rng);
  return center_ + generators_ * xi;
}

Vector Zonotope::sample_extreme(std::mt19937_64& rng) const {
  std::bernoulli_distribution coin(0.5);
  Vector s(num_generators());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = coin(rng) ? 1.0 : -1.0;
  return center_ + generators_ * s;
}

// ----------------------------------------------------------- ReferenceSchedule

ReferenceSchedule ReferenceSchedule::constant(const Vector& value) { return piecewise({0}, {value}); }

ReferenceSchedule ReferenceSchedule::piecewise(std::vector<int> switch_times, std::vector<Vector> values) {
  if (switch_times.empty() || switch_times.size() != values.size())
    throw std::invalid_argument("ReferenceSchedule: need one value per switch time");
  for (size_t i = 1; i < switch_times.size(); ++i)
    if (switch_times[i] <= switch_times[i - 1])
      throw std::invalid_argument("ReferenceSchedule: switch times must be strictly increasing");
  for (const auto& v : values)
    if (v.size() != values.front().size()) throw std::invalid_argument("ReferenceSchedule: inconsistent value sizes");
  return ReferenceSchedule(Piecewise{std::move(switch_times), std::move(values)});
}

ReferenceSchedule ReferenceSchedule::periodic(std::vector<Vector> samples) {
  if (samples.empty()) throw std::invalid_argument("ReferenceSchedule: periodic schedule needs samples");
  for (const auto& v : samples)
    if (v.size() != samples.front().size()) throw std::invalid_argument("ReferenceSchedule: inconsistent sample sizes");
  return ReferenceSchedule(Periodic{std::move(samples)});
}

int ReferenceSchedule::period() const {
  if (const auto* p = as_periodic()) return static_cast<int>(p->samples.size());
  return 0;
}

int ReferenceSchedule::value_dim() const {
  if (const auto* p = as_periodic()) return static_cast<int>(p->samples.front().size());
  return static_cast<int>(as_piecewise()->values.front().size());
}

Vector ReferenceSchedule::at(int t) const {
  if (const auto* p = as_periodic()) {
    const int tau = static_cast<int>(p->samples.size());
    return p->samples[((t % tau) + tau) % tau];
  }
  const auto& pw = *as_piecewise();
  size_t i = 0;
  while (i + 1 < pw.switch_times.size() && pw.switch_times[i + 1] <= t) ++i;
  return pw.values[i];
}

std::vector<Vector> ReferenceSchedule::window(int t, int length) const {
  std::vector<Vector> out;
  out.reserve(length);
  for (int k = 0; k < length; ++k) out.push_back(at(t + k));
  return out;
}

// ------------------------------------------------------------- steady states

Matrix null_space(const Matrix& M, double tol) {
  const auto n = M.cols();
  if (M.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double threshold = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > threshold) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

Polytope steady_state_manifold(const LinearSystem& sys, const Polytope& Z, double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw std::invalid_argument("steady_state_manifold: sigma must lie in [0, 1)");
  const int nx = sys.nx(), nu = sys.nu();
  if (Z.dim() != nx + nu) throw DimensionError("steady_state_manifold: Z must live in (x, u) space");
  Matrix Ess(nx, nx + nu);
  Ess << sys.A() - Matrix::Identity(nx, nx), sys.B();
  const Polytope scaled = Z.scaled(sigma);
  Matrix Feq(scaled.num_eq() + nx, nx + nu);
  Feq << scaled.Feq(), Ess;
  Vector geq(Feq.rows());
  geq << scaled.geq(), Vector::Zero(nx);
  Polytope Zs(scaled.F(), scaled.g(), Feq, geq);
  if (Zs.is_empty()) throw EmptySetError("steady_state_manifold: sigma Z has no steady state");
  return Zs;
}

// ------------------------------------------------------------------ OutputSet

OutputSet::OutputSet(Polytope manifold, Matrix output_map, std::optional<Polytope> exact)
    : manifold_(std::move(manifold)), output_map_(std::move(output_map)), exact_(std::move(exact)) {}

const Polytope& OutputSet::polytope() const {
  if (!exact_) throw std::logic_error("OutputSet: exact polytope only available for ny <= 2");
  return *exact_;
}

double OutputSet::support(const Vector& q) const { return manifold_.support(output_map_.transpose() * q); }

bool OutputSet::contains(const Vector& y, double tol) const {
  if (exact_) return exact_->contains(y, tol);
  Matrix Feq(manifold_.num_eq() + output_map_.rows(), manifold_.dim());
  Feq << manifold_.Feq(), output_map_;
  Vector geq(Feq.rows());
  geq << manifold_.geq(), y;
  return lp::find_feasible(manifold_.F(), manifold_.g(), Feq, geq).status == lp::LpStatus::Optimal;
}

namespace {

using Point2 = Eigen::Vector2d;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; returns the hull counter-clockwise without
// collinear points.
std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) { return (a - b).cwiseAbs().maxCoeff() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 1e-14) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

Polytope planar_projection(const Polytope& manifold, const Matrix& Cy) {
  auto support_point = [&](const Point2& dir) -> Point2 {
    const Vector z = manifold.support_point(Cy.transpose() * dir);
    return Cy * z;
  };
  std::vector<Point2> pts;
  for (int k = 0; k < 8; ++k) {
    const double a = k * M_PI / 4.0;
    pts.push_back(support_point(Point2(std::cos(a), std::sin(a))));
  }
  for (int round = 0; round < 1000; ++round) {
    const auto hull = convex_hull(pts);
    if (hull.size() == 1) {
      return Polytope(Matrix(0, 2), Vector(0), Matrix::Identity(2, 2), hull[0]);
    }
    if (hull.size() == 2) {
      const Point2 v = (hull[1] - hull[0]).normalized();
      const Point2 n(-v.y(), v.x());
      bool grew = false;
      for (const Point2& dir : {n, Point2(-n)}) {
        const Point2 p = support_point(dir);
        if (dir.dot(p) > dir.dot(hull[0]) + 1e-9 * (1.0 + std::abs(dir.dot(p)))) {
          pts.push_back(p);
          grew = true;
        }
      }
      if (!grew) {
        Matrix F(2, 2);
        F.row(0) = v.transpose();
        F.row(1) = -v.transpose();
        Vector g(2);
        g << v.dot(hull[1]), -v.dot(hull[0]);
        Matrix Feq = n.transpose();
        Vector geq(1);
        geq << n.dot(hull[0]);
        return Polytope(F, g, Feq, geq);
      }
      continue;
    }
    bool grew = false;
    for (size_t i = 0; i < hull.size(); ++i) {
      const Point2& a = hull[i];
      const Point2& b = hull[(i + 1) % hull.size()];
      const Point2 n = Point2(b.y() - a.y(), a.x() - b.x()).normalized();
      const Point2 p = support_point(n);
      if (n.dot(p) > n.dot(a) + 1e-9 * (1.0 + std::abs(n.dot(p)))) {
        pts.push_back(p);
        grew = true;
      }
    }
    if (!grew) {
      Matrix F(hull.size(), 2);
      Vector g(hull.size());
      for (size_t i = 0; i < hull.size(); ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % hull.size()];
        const Point2 n = Point2(b.y() - a.y(), a.x() - b.x()).normalized();
        F.row(i) = n.transpose();
        g(i) = n.dot(a);
      }
      return Polytope(F, g);
    }
  }
  throw std::runtime_error("output_set: planar projection did not converge");
}

}  // namespace

OutputSet output_set(const LinearSystem& sys, const Polytope& manifold) {
  const Matrix Cy = sys.output_map();
  if (manifold.dim() != Cy.cols()) throw DimensionError("output_set: manifold must live in (x, u) space");
  if (manifold.is_empty()) throw EmptySetError("output_set: empty manifold");
  std::optional<Polytope> exact;
  if (sys.ny() == 1) {
    const Vector c = Cy.row(0).transpose();
    const double hi = manifold.support(c);
    const double lo = -manifold.support(-c);
    Vector l(1), u(1);
    l << lo;
    u << hi;
    exact = Polytope::box(l, u);
  } else if (sys.ny() == 2) {
    exact = planar_projection(manifold, Cy);
  }
  return OutputSet(manifold, Cy, std::move(exact));
}

}  // namespace mpct
