#pragma once

#include <cstdint>
#include <vector>

#include "rdprune/grid.hpp"
#include "rdprune/rd_curve.hpp"

namespace rdprune {

/// Curves and grid standing in for a model, for allocator tests and timing.
struct SyntheticInstance {
  SparsityGrid grid;
  std::vector<RDCurve> curves;  // unfiltered
};

struct SyntheticOptions {
  std::size_t layers = 4;
  std::size_t levels = 8;
  std::size_t min_size = 1;
  std::size_t max_size = 64;
  /// Increments sorted ascending, so every curve is convex.
  bool convex = false;
  /// Fraction of points pushed up by a bump, which breaks monotonicity.
  double noise = 0.0;
};

/// Nondecreasing curves with delta(0) = 0 built from increments that are
/// multiples of 0.25 (exact in double, so ties are common). Deterministic
/// given `seed` on every platform.
SyntheticInstance random_instance(std::uint64_t seed, const SyntheticOptions& options);

/// Instance over explicit layer sizes, increments scaled by layer size.
SyntheticInstance sized_instance(std::uint64_t seed, const std::vector<std::size_t>& sizes,
                                 std::size_t levels, bool convex = false);

/// Weight counts of the 54 prunable layers of ResNet-50 (53 convolutions,
/// downsampling shortcuts included, and the final 2048x1000 classifier).
std::vector<std::size_t> resnet50_layer_sizes();

}  // namespace rdprune
