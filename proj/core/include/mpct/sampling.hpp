#pragma once

#include <cstdint>
#include <vector>

#include "mpct/model.hpp"

namespace mpct {

struct HitAndRunOptions {
  int burn_in = 50;
  /// Number of chain steps between returned samples.
  int thinning = 5;
};

/// Draws `count` points from a bounded polytope with a hit-and-run chain that
/// moves inside the affine hull of the equality part. The chain starts at the
/// Chebyshev center and is driven by a std::mt19937_64 seeded with `seed`, so
/// results are reproducible. Throws EmptySetError for empty sets and
/// UnboundedError when a chord is unbounded.
std::vector<Vector> hit_and_run(const Polytope& P, int count, std::uint64_t seed,
                                const HitAndRunOptions& options = {});

}  // namespace mpct
