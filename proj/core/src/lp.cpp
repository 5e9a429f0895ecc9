#include "mpct/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mpct::lp {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Tableau over columns [z+ (d) | z- (d) | slack (m) | artificial (na)] with
// the right-hand side stored in the last column.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& F, const Eigen::VectorXd& g, const Eigen::MatrixXd& Feq,
          const Eigen::VectorXd& geq, int d, const LpOptions& opt)
      : d_(d), m_(static_cast<int>(F.rows())), me_(static_cast<int>(Feq.rows())), opt_(opt) {
    rows_ = m_ + me_;
    std::vector<bool> needs_artificial(rows_, false);
    for (int i = 0; i < m_; ++i) needs_artificial[i] = g(i) < 0.0;
    for (int i = 0; i < me_; ++i) needs_artificial[m_ + i] = true;
    num_art_ = 0;
    for (bool b : needs_artificial) num_art_ += b ? 1 : 0;
    art_begin_ = 2 * d_ + m_;
    cols_ = art_begin_ + num_art_;
    T_ = RowMatrix::Zero(rows_, cols_ + 1);
    basis_.assign(rows_, -1);

    int a = art_begin_;
    for (int i = 0; i < m_; ++i) {
      const double sign = needs_artificial[i] ? -1.0 : 1.0;
      T_.row(i).segment(0, d_) = sign * F.row(i);
      T_.row(i).segment(d_, d_) = -sign * F.row(i);
      T_(i, 2 * d_ + i) = sign;
      T_(i, cols_) = sign * g(i);
      if (needs_artificial[i]) {
        T_(i, a) = 1.0;
        basis_[i] = a++;
      } else {
        basis_[i] = 2 * d_ + i;
      }
    }
    for (int k = 0; k < me_; ++k) {
      const int i = m_ + k;
      const double sign = geq(k) < 0.0 ? -1.0 : 1.0;
      T_.row(i).segment(0, d_) = sign * Feq.row(k);
      T_.row(i).segment(d_, d_) = -sign * Feq.row(k);
      T_(i, cols_) = sign * geq(k);
      T_(i, a) = 1.0;
      basis_[i] = a++;
    }
    rhs_scale_ = 1.0 + (rows_ > 0 ? T_.col(cols_).cwiseAbs().maxCoeff() : 0.0);
  }

  // Runs the simplex loop for cost vector c (length cols_). Returns false on
  // an unbounded direction.
  bool optimize(const Eigen::VectorXd& c, bool allow_artificial) {
    Eigen::RowVectorXd obj = Eigen::RowVectorXd::Zero(cols_ + 1);
    obj.head(cols_) = c.transpose();
    for (int r = 0; r < rows_; ++r) {
      const double cb = c(basis_[r]);
      if (cb != 0.0) obj -= cb * T_.row(r);
    }
    bool bland = false;
    int degenerate_run = 0;
    while (pivots_ < opt_.max_pivots) {
      int enter = -1;
      double best = opt_.pivot_tol;
      const int limit = allow_artificial ? cols_ : art_begin_;
      for (int j = 0; j < limit; ++j) {
        if (obj(j) > best) {
          enter = j;
          if (bland) break;
          best = obj(j);
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_pivot = 0.0;
      for (int r = 0; r < rows_; ++r) {
        const double a = T_(r, enter);
        if (a <= opt_.pivot_tol) continue;
        const double ratio = std::max(T_(r, cols_), 0.0) / a;
        const bool better = ratio < best_ratio - 1e-12;
        const bool tie = !better && ratio <= best_ratio + 1e-12;
        if (better || (tie && (bland ? basis_[r] < basis_[leave] : a > best_pivot))) {
          leave = r;
          best_ratio = ratio;
          best_pivot = a;
        }
      }
      if (leave < 0) return false;
      if (best_ratio <= 1e-14) {
        if (++degenerate_run > 25) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter, obj);
    }
    return true;
  }

  void pivot(int r, int j, Eigen::RowVectorXd& obj) {
    T_.row(r) /= T_(r, j);
    for (int i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double f = T_(i, j);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    if (obj(j) != 0.0) obj -= obj(j) * T_.row(r);
    basis_[r] = j;
    ++pivots_;
  }

  double artificial_sum() const {
    double s = 0.0;
    for (int r = 0; r < rows_; ++r)
      if (basis_[r] >= art_begin_) s += std::max(T_(r, cols_), 0.0);
    return s;
  }

  // Pivots basic artificials (at zero level) out of the basis where possible.
  void expel_artificials() {
    Eigen::RowVectorXd dummy = Eigen::RowVectorXd::Zero(cols_ + 1);
    for (int r = 0; r < rows_; ++r) {
      if (basis_[r] < art_begin_) continue;
      int best = -1;
      double mag = 1e-9;
      for (int j = 0; j < art_begin_; ++j) {
        if (std::abs(T_(r, j)) > mag) {
          mag = std::abs(T_(r, j));
          best = j;
        }
      }
      if (best >= 0) pivot(r, best, dummy);
    }
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cols_);
    for (int r = 0; r < rows_; ++r) v(basis_[r]) = std::max(T_(r, cols_), 0.0);
    return v.head(d_) - v.segment(d_, d_);
  }

  int cols() const { return cols_; }
  int art_begin() const { return art_begin_; }
  int pivots() const { return pivots_; }
  double rhs_scale() const { return rhs_scale_; }

 private:
  int d_, m_, me_;
  const LpOptions& opt_;
  int rows_ = 0, cols_ = 0, num_art_ = 0, art_begin_ = 0;
  RowMatrix T_;
  std::vector<int> basis_;
  int pivots_ = 0;
  double rhs_scale_ = 1.0;
};

struct Normalized {
  Eigen::MatrixXd F, Feq;
  Eigen::VectorXd g, geq;
  bool trivially_infeasible = false;
};

Normalized normalize(const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                     const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq, int d,
                     double tol) {
  Normalized out;
  std::vector<int> keep;
  for (int i = 0; i < F.rows(); ++i) {
    const double n = F.row(i).norm();
    if (n == 0.0) {
      if (g(i) < -tol) out.trivially_infeasible = true;
    } else {
      keep.push_back(i);
    }
  }
  out.F.resize(static_cast<Eigen::Index>(keep.size()), d);
  out.g.resize(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    const double n = F.row(keep[k]).norm();
    out.F.row(k) = F.row(keep[k]) / n;
    out.g(k) = g(keep[k]) / n;
  }
  keep.clear();
  for (int i = 0; i < Feq.rows(); ++i) {
    const double n = Feq.row(i).norm();
    if (n == 0.0) {
      if (std::abs(geq(i)) > tol) out.trivially_infeasible = true;
    } else {
      keep.push_back(i);
    }
  }
  out.Feq.resize(static_cast<Eigen::Index>(keep.size()), d);
  out.geq.resize(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    const double n = Feq.row(keep[k]).norm();
    out.Feq.row(k) = Feq.row(keep[k]) / n;
    out.geq(k) = geq(keep[k]) / n;
  }
  return out;
}

int infer_dim(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Feq, Eigen::Index hint) {
  if (hint >= 0) return static_cast<int>(hint);
  if (F.cols() > 0) return static_cast<int>(F.cols());
  return static_cast<int>(Feq.cols());
}

LpResult solve(const Eigen::VectorXd* c, const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
               const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq, int d,
               const LpOptions& options) {
  LpResult result;
  const Eigen::MatrixXd Feq_d = Feq.rows() == 0 ? Eigen::MatrixXd(0, d) : Feq;
  const Eigen::VectorXd geq_d = Feq.rows() == 0 ? Eigen::VectorXd(0) : geq;
  const Eigen::MatrixXd F_d = F.rows() == 0 ? Eigen::MatrixXd(0, d) : F;
  const Eigen::VectorXd g_d = F.rows() == 0 ? Eigen::VectorXd(0) : g;
  Normalized nz = normalize(F_d, g_d, Feq_d, geq_d, d, options.feasibility_tol);
  if (nz.trivially_infeasible) {
    result.status = LpStatus::Infeasible;
    return result;
  }
  Tableau tab(nz.F, nz.g, nz.Feq, nz.geq, d, options);

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tab.cols());
  phase1.tail(tab.cols() - tab.art_begin()).setConstant(-1.0);
  tab.optimize(phase1, true);
  if (tab.artificial_sum() > options.feasibility_tol * tab.rhs_scale()) {
    result.status = LpStatus::Infeasible;
    result.pivots = tab.pivots();
    return result;
  }
  tab.expel_artificials();

  if (c != nullptr) {
    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(tab.cols());
    phase2.head(d) = *c;
    phase2.segment(d, d) = -*c;
    if (!tab.optimize(phase2, false)) {
      result.status = LpStatus::Unbounded;
      result.pivots = tab.pivots();
      result.value = std::numeric_limits<double>::infinity();
      return result;
    }
  }
  result.status = LpStatus::Optimal;
  result.z = tab.primal();
  result.value = c != nullptr ? c->dot(result.z) : 0.0;
  result.pivots = tab.pivots();
  return result;
}

}  // namespace

LpResult maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq,
                  const LpOptions& options) {
  const int d = infer_dim(F, Feq, c.size());
  return solve(&c, F, g, Feq, geq, d, options);
}

LpResult find_feasible(const Eigen::MatrixXd& F, const Eigen::VectorXd& g,
                       const Eigen::MatrixXd& Feq, const Eigen::VectorXd& geq,
                       const LpOptions& options) {
  const int d = infer_dim(F, Feq, -1);
  return solve(nullptr, F, g, Feq, geq, d, options);
}

}  // namespace mpct::lp
