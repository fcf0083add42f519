#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rdprune/model.hpp"
#include "rdprune/plan.hpp"

namespace rdprune {

/// Flat weight indices ordered by increasing |w|; equal magnitudes keep
/// ascending index order. Pruning k weights zeroes the first k entries.
std::vector<std::uint32_t> magnitude_order(std::span<const float> weights);

struct PruneMask {
  std::size_t layer_index = 0;
  std::vector<bool> kept;  // aligned with the layer's flat weights

  std::size_t pruned_count() const;
};

PruneMask magnitude_mask(const ModelGraph& model, std::size_t layer, std::size_t k);

/// Copy of `model` with the k smallest-magnitude weights of `layer` set to
/// zero. Throws ArgumentError for a non-prunable layer or k > n_layer.
ModelGraph prune_layer(const ModelGraph& model, std::size_t layer, std::size_t k);

/// Copy of `model` where, for every plan entry, the `pruned` smallest-magnitude
/// weights of that layer are zero. Idempotent.
ModelGraph apply_plan(const ModelGraph& model, const AllocationPlan& plan);

/// Number of exact zeros in each prunable layer's weights.
std::vector<std::size_t> zero_counts(const ModelGraph& model);

}  // namespace rdprune
