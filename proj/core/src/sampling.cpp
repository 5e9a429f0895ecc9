#include "mpct/sampling.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace mpct {

std::vector<Vector> hit_and_run(const Polytope& P, int count, std::uint64_t seed,
                                const HitAndRunOptions& options) {
  std::vector<Vector> out;
  if (count <= 0) return out;
  const auto ball = P.chebyshev_ball();
  const Matrix basis = P.has_equalities() ? null_space(P.Feq()) : Matrix::Identity(P.dim(), P.dim());
  const int k = static_cast<int>(basis.cols());
  out.reserve(count);
  if (k == 0) {
    out.assign(count, ball.center);
    return out;
  }
  const Matrix Fr = P.F() * basis;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Vector theta = Vector::Zero(k);
  // Slack of each row at the current point, kept up to date incrementally.
  Vector slack = P.g() - P.F() * ball.center;
  const int total = options.burn_in + count * options.thinning;
  for (int step = 0; step < total; ++step) {
    Vector d(k);
    for (int i = 0; i < k; ++i) d(i) = normal(rng);
    d.normalize();
    const Vector rate = Fr * d;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rate.size(); ++i) {
      const double s = std::max(slack(i), 0.0);
      if (rate(i) > 1e-14) {
        hi = std::min(hi, s / rate(i));
      } else if (rate(i) < -1e-14) {
        lo = std::max(lo, s / rate(i));
      }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw UnboundedError("hit_and_run: polytope is unbounded");
    const double t = lo + (hi - lo) * unit(rng);
    theta += t * d;
    slack -= t * rate;
    if (step >= options.burn_in && (step - options.burn_in + 1) % options.thinning == 0)
      out.push_back(ball.center + basis * theta);
  }
  return out;
}

}  // namespace mpct
