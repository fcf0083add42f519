#pragma once

#include <cstddef>
#include <vector>

#include "rdprune/model.hpp"

namespace rdprune {

/// Discretisation of per-layer prune counts shared by curves and allocator.
///
/// Layer i can be pruned to c_i(j) = base_i + round(j * (n_i - base_i) / S)
/// weights for j = 0..S. `base_i` is the number of weights already pruned in
/// the model the grid was built for (zero for a dense model).
class SparsityGrid {
 public:
  SparsityGrid() = default;
  SparsityGrid(std::size_t levels, std::vector<std::size_t> sizes,
               std::vector<std::size_t> base = {});

  /// Grid over the prunable layers of `model`; base counts are the exact
  /// zeros already present when `count_existing_zeros` is set.
  static SparsityGrid for_model(const ModelGraph& model, std::size_t levels,
                                bool count_existing_zeros = false);

  std::size_t levels() const noexcept { return levels_; }  // S
  std::size_t layer_count() const noexcept { return sizes_.size(); }
  std::size_t layer_size(std::size_t i) const { return sizes_.at(i); }
  std::size_t base(std::size_t i) const { return base_.at(i); }
  std::size_t total_size() const;
  std::size_t total_base() const;

  /// c_i(j), total pruned weights in layer i at grid index j.
  std::size_t count(std::size_t layer, std::size_t j) const;
  /// c_i(j) - base_i, weights newly pruned at grid index j.
  std::size_t added(std::size_t layer, std::size_t j) const;
  /// Largest difference between consecutive grid counts in one layer.
  std::size_t max_step() const;

  friend bool operator==(const SparsityGrid&, const SparsityGrid&) = default;

 private:
  std::size_t levels_ = 0;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> base_;
};

}  // namespace rdprune
