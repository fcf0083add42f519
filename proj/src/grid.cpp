#include "rdprune/grid.hpp"

#include <algorithm>

#include "rdprune/error.hpp"
#include "rdprune/pruner.hpp"

namespace rdprune {

SparsityGrid::SparsityGrid(std::size_t levels, std::vector<std::size_t> sizes,
                           std::vector<std::size_t> base)
    : levels_(levels), sizes_(std::move(sizes)), base_(std::move(base)) {
  if (levels_ == 0) throw ArgumentError("sparsity grid needs S >= 1");
  if (base_.empty()) base_.assign(sizes_.size(), 0);
  if (base_.size() != sizes_.size())
    throw ArgumentError("sparsity grid: base and size lists differ in length");
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (base_[i] > sizes_[i])
      throw ArgumentError("sparsity grid: layer " + std::to_string(i) +
                          " base exceeds its size");
  }
}

SparsityGrid SparsityGrid::for_model(const ModelGraph& model, std::size_t levels,
                                     bool count_existing_zeros) {
  std::vector<std::size_t> sizes;
  for (auto li : model.prunable_layers()) sizes.push_back(model.layers[li].weight->size());
  std::vector<std::size_t> base;
  if (count_existing_zeros) base = zero_counts(model);
  return SparsityGrid(levels, std::move(sizes), std::move(base));
}

std::size_t SparsityGrid::total_size() const {
  std::size_t n = 0;
  for (auto s : sizes_) n += s;
  return n;
}

std::size_t SparsityGrid::total_base() const {
  std::size_t n = 0;
  for (auto b : base_) n += b;
  return n;
}

std::size_t SparsityGrid::added(std::size_t layer, std::size_t j) const {
  if (j > levels_) throw ArgumentError("grid index " + std::to_string(j) + " exceeds S");
  const std::size_t span = sizes_.at(layer) - base_.at(layer);
  // round(j * span / S), halves rounded up, in integer arithmetic.
  return (2 * j * span + levels_) / (2 * levels_);
}

std::size_t SparsityGrid::count(std::size_t layer, std::size_t j) const {
  return base_.at(layer) + added(layer, j);
}

std::size_t SparsityGrid::max_step() const {
  std::size_t step = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i)
    for (std::size_t j = 1; j <= levels_; ++j) step = std::max(step, added(i, j) - added(i, j - 1));
  return step;
}

}  // namespace rdprune
