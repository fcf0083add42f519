#include "rdprune/synthetic.hpp"

#include <algorithm>

#include "rdprune/calibration.hpp"
#include "rdprune/error.hpp"

namespace rdprune {

namespace {

std::size_t below(SplitMix64& rng, std::size_t n) { return rng.next() % n; }

RDCurve build_curve(SplitMix64& rng, const SparsityGrid& grid, std::size_t i,
                    double scale, bool convex, double noise) {
  const std::size_t S = grid.levels();
  std::vector<double> steps(S);
  for (auto& s : steps) s = 0.25 * static_cast<double>(below(rng, 10)) * scale;
  if (convex) std::sort(steps.begin(), steps.end());
  RDCurve curve;
  curve.layer_index = i;
  double acc = 0.0;
  for (std::size_t j = 0; j <= S; ++j) {
    if (j > 0) acc += steps[j - 1];
    double d = acc;
    if (noise > 0.0 && j > 0 && rng.next_open_unit() < noise)
      d += 0.25 * static_cast<double>(1 + below(rng, 8)) * scale;
    curve.points.push_back({j, grid.count(i, j), d, true});
  }
  return curve;
}

}  // namespace

SyntheticInstance random_instance(std::uint64_t seed, const SyntheticOptions& options) {
  if (options.layers == 0 || options.levels == 0 || options.min_size == 0 ||
      options.min_size > options.max_size)
    throw ArgumentError("random_instance: bad options");
  SplitMix64 rng(seed);
  std::vector<std::size_t> sizes(options.layers);
  for (auto& n : sizes)
    n = options.min_size + below(rng, options.max_size - options.min_size + 1);
  SyntheticInstance inst{SparsityGrid(options.levels, sizes), {}};
  for (std::size_t i = 0; i < options.layers; ++i)
    inst.curves.push_back(build_curve(rng, inst.grid, i, 1.0, options.convex, options.noise));
  return inst;
}

SyntheticInstance sized_instance(std::uint64_t seed, const std::vector<std::size_t>& sizes,
                                 std::size_t levels, bool convex) {
  SplitMix64 rng(seed);
  SyntheticInstance inst{SparsityGrid(levels, sizes), {}};
  // Larger layers tolerate pruning better; scale per-step cost down with size.
  for (std::size_t i = 0; i < sizes.size(); ++i)
    inst.curves.push_back(build_curve(rng, inst.grid, i,
                                      1.0 / static_cast<double>(1 + sizes[i] / 1024),
                                      convex, 0.0));
  return inst;
}

std::vector<std::size_t> resnet50_layer_sizes() {
  std::vector<std::size_t> sizes{7 * 7 * 3 * 64};
  const std::size_t blocks[] = {3, 4, 6, 3};
  const std::size_t widths[] = {64, 128, 256, 512};
  std::size_t in = 64;
  for (int stage = 0; stage < 4; ++stage) {
    const std::size_t w = widths[stage];
    for (std::size_t b = 0; b < blocks[stage]; ++b) {
      sizes.push_back(in * w);
      sizes.push_back(9 * w * w);
      sizes.push_back(w * 4 * w);
      if (b == 0) sizes.push_back(in * 4 * w);
      in = 4 * w;
    }
  }
  sizes.push_back(2048 * 1000);
  return sizes;
}

}  // namespace rdprune
