#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mpct/errors.hpp"

namespace mpct {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Absolute tolerance used for set membership unless a caller overrides it.
inline constexpr double kMembershipTol = 1e-9;

/// Discrete-time LTI model x+ = Ax + Bu, y = Cx + Du.
///
/// Construction rejects inconsistent dimensions, non-finite entries and
/// uncontrollable (A, B) pairs. The controllability index is the smallest k
/// with rank [B, AB, ..., A^{k-1}B] = nx.
class LinearSystem {
 public:
  LinearSystem(Matrix A, Matrix B, Matrix C, Matrix D);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Matrix& D() const { return D_; }

  int nx() const { return static_cast<int>(A_.rows()); }
  int nu() const { return static_cast<int>(B_.cols()); }
  int ny() const { return static_cast<int>(C_.rows()); }
  int controllability_index() const { return controllability_index_; }

  Vector step(const Vector& x, const Vector& u) const { return A_ * x + B_ * u; }
  Vector output(const Vector& x, const Vector& u) const { return C_ * x + D_ * u; }

  /// [C D], the output map acting on the stacked (x, u) vector.
  Matrix output_map() const;

 private:
  Matrix A_, B_, C_, D_;
  int controllability_index_ = 0;
};

/// Smallest k with rank [B, AB, ..., A^{k-1}B] = nx, or -1 if never reached.
int controllability_index(const Matrix& A, const Matrix& B, double tol = 1e-9);

/// Closed polyhedron {z : F z <= g, Feq z = geq} in H-representation.
class Polytope {
 public:
  Polytope() = default;
  Polytope(Matrix F, Vector g, Matrix Feq = Matrix(), Vector geq = Vector());

  static Polytope box(const Vector& lower, const Vector& upper);
  /// The whole space R^d (no rows).
  static Polytope universe(int dim);

  int dim() const { return dim_; }
  int num_ineq() const { return static_cast<int>(F_.rows()); }
  int num_eq() const { return static_cast<int>(Feq_.rows()); }
  bool has_equalities() const { return num_eq() > 0; }

  const Matrix& F() const { return F_; }
  const Vector& g() const { return g_; }
  const Matrix& Feq() const { return Feq_; }
  const Vector& geq() const { return geq_; }

  bool contains(const Vector& z, double tol = kMembershipTol) const;
  /// Largest violation max(F z - g, |Feq z - geq|); <= 0 means inside.
  double violation(const Vector& z) const;

  /// Support function max q'z over the set. Throws EmptySetError when the
  /// set is empty and returns +inf when unbounded in direction q.
  double support(const Vector& q) const;
  /// Maximizer attaining support(q).
  Vector support_point(const Vector& q) const;

  bool is_empty() const;

  struct ChebyshevBall {
    Vector center;
    double radius = 0.0;
  };
  /// Largest ball inside the set, measured within its affine hull. The radius
  /// is capped at `cap` so unbounded sets still return a point.
  ChebyshevBall chebyshev_ball(double cap = 1e6) const;
  /// True when the Chebyshev radius (within the affine hull) exceeds `tol`.
  bool has_interior(double tol = 1e-9) const;

  /// Intersection of two sets over the same space.
  Polytope intersect(const Polytope& other) const;
  /// {s z : z in P}; valid for s > 0, and for s = 0 when P contains the origin
  /// (then the result is {z : F z <= 0}).
  Polytope scaled(double s) const;
  /// {z : M z + b in P}.
  Polytope preimage(const Matrix& M, const Vector& b) const;
  /// The same set with every equality row written as two inequality rows.
  Polytope without_equalities() const;
  /// Drops inequality rows implied by the others (LP test, tolerance `tol`).
  Polytope remove_redundant(double tol = 1e-8, int* removed = nullptr) const;

 private:
  int dim_ = 0;
  Matrix F_;
  Vector g_;
  Matrix Feq_;
  Vector geq_;
};

/// Zonotope center + sum_i [-1, 1] g_i with generators stored as columns.
class Zonotope {
 public:
  Zonotope() = default;
  Zonotope(Vector center, Matrix generators);

  static Zonotope box(const Vector& lower, const Vector& upper);
  static Zonotope point(const Vector& p);

  int dim() const { return static_cast<int>(center_.size()); }
  int num_generators() const { return static_cast<int>(generators_.cols()); }
  const Vector& center() const { return center_; }
  const Matrix& generators() const { return generators_; }

  /// Exact: h(q) = q'c + sum_i |q'g_i|.
  double support(const Vector& q) const;
  /// True when every generator is (numerically) zero.
  bool is_point(double tol = 0.0) const;

  Zonotope linear_map(const Matrix& M) const;
  Zonotope minkowski_sum(const Zonotope& other) const;
  Zonotope scaled(double s) const;
  /// Drops zero generators.
  Zonotope compacted(double tol = 0.0) const;

  /// Membership through the LP  exists lambda in [-1,1]^p : G lambda = z - c.
  bool contains(const Vector& z, double tol = kMembershipTol) const;
  /// Facet enumeration; the zonotope must be full dimensional.
  Polytope to_polytope() const;

  /// Point center + G xi for xi drawn uniformly from the parameter box.
  Vector sample(std::mt19937_64& rng) const;
  /// Point center + G s for a uniformly random sign vector s.
  Vector sample_extreme(std::mt19937_64& rng) const;

 private:
  Vector center_;
  Matrix generators_;
};

/// Setpoint schedule: piecewise-constant switches or a periodic trajectory.
class ReferenceSchedule {
 public:
  struct Piecewise {
    std::vector<int> switch_times;
    std::vector<Vector> values;
  };
  struct Periodic {
    std::vector<Vector> samples;  // one per instant of the period
  };

  static ReferenceSchedule constant(const Vector& value);
  static ReferenceSchedule piecewise(std::vector<int> switch_times, std::vector<Vector> values);
  static ReferenceSchedule periodic(std::vector<Vector> samples);

  bool is_periodic() const { return std::holds_alternative<Periodic>(data_); }
  int period() const;
  int value_dim() const;

  /// Value active at time t (piecewise) or sample t mod tau (periodic).
  Vector at(int t) const;
  /// The next `length` samples starting at t.
  std::vector<Vector> window(int t, int length) const;

  const Piecewise* as_piecewise() const { return std::get_if<Piecewise>(&data_); }
  const Periodic* as_periodic() const { return std::get_if<Periodic>(&data_); }

 private:
  explicit ReferenceSchedule(std::variant<Piecewise, Periodic> d) : data_(std::move(d)) {}
  std::variant<Piecewise, Periodic> data_;
};

/// Z_s = {(x, u) in sigma Z : x = Ax + Bu}, returned with its equality part.
/// Throws EmptySetError when the intersection is empty.
Polytope steady_state_manifold(const LinearSystem& sys, const Polytope& Z, double sigma);

/// Image of a steady-state manifold through y = Cx + Du.
///
/// For ny <= 2 the image is returned exactly as a polytope; for larger ny only
/// the support oracle is available.
class OutputSet {
 public:
  OutputSet(Polytope manifold, Matrix output_map, std::optional<Polytope> exact);

  int dim() const { return static_cast<int>(output_map_.rows()); }
  bool is_exact() const { return exact_.has_value(); }
  const Polytope& polytope() const;
  const Polytope& manifold() const { return manifold_; }

  double support(const Vector& q) const;
  bool contains(const Vector& y, double tol = kMembershipTol) const;

 private:
  Polytope manifold_;
  Matrix output_map_;
  std::optional<Polytope> exact_;
};

OutputSet output_set(const LinearSystem& sys, const Polytope& manifold);

/// Orthonormal basis of the null space of M (columns).
Matrix null_space(const Matrix& M, double tol = 1e-10);

}  // namespace mpct
