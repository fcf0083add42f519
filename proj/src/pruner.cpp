#include "rdprune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdprune/error.hpp"

namespace rdprune {

std::vector<std::uint32_t> magnitude_order(std::span<const float> weights) {
  std::vector<std::uint32_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::fabs(weights[a]) < std::fabs(weights[b]);
  });
  return order;
}

std::size_t PruneMask::pruned_count() const {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), false));
}

namespace {

const Tensor& prunable_weight(const ModelGraph& model, std::size_t layer) {
  if (layer >= model.layers.size())
    throw ArgumentError("layer " + std::to_string(layer) + " out of range");
  const auto& spec = model.layers[layer];
  if (!spec.prunable() || !spec.weight)
    throw ArgumentError("layer " + std::to_string(layer) + " (" +
                        std::string(to_string(spec.kind)) + ") is not prunable");
  return *spec.weight;
}

void check_count(std::size_t layer, std::size_t k, std::size_t n) {
  if (k > n)
    throw ArgumentError("cannot prune " + std::to_string(k) + " of " + std::to_string(n) +
                        " weights in layer " + std::to_string(layer));
}

}  // namespace

PruneMask magnitude_mask(const ModelGraph& model, std::size_t layer, std::size_t k) {
  const Tensor& w = prunable_weight(model, layer);
  check_count(layer, k, w.size());
  PruneMask mask{layer, std::vector<bool>(w.size(), true)};
  const auto order = magnitude_order(w.data());
  for (std::size_t i = 0; i < k; ++i) mask.kept[order[i]] = false;
  return mask;
}

ModelGraph prune_layer(const ModelGraph& model, std::size_t layer, std::size_t k) {
  const Tensor& w = prunable_weight(model, layer);
  check_count(layer, k, w.size());
  ModelGraph out = model;
  if (k == 0) return out;
  const auto order = magnitude_order(w.data());
  auto data = out.layers[layer].weight->data();
  for (std::size_t i = 0; i < k; ++i) data[order[i]] = 0.0f;
  return out;
}

ModelGraph apply_plan(const ModelGraph& model, const AllocationPlan& plan) {
  const auto prunable = model.prunable_layers();
  if (plan.layers.size() != prunable.size())
    throw ArgumentError("plan covers " + std::to_string(plan.layers.size()) +
                        " layers, model has " + std::to_string(prunable.size()) +
                        " prunable layers");
  ModelGraph out = model;
  for (std::size_t i = 0; i < prunable.size(); ++i) {
    const auto& entry = plan.layers[i];
    if (entry.layer_index != prunable[i])
      throw ArgumentError("plan entry " + std::to_string(i) + " targets layer " +
                          std::to_string(entry.layer_index) + ", expected " +
                          std::to_string(prunable[i]));
    const Tensor& w = prunable_weight(model, prunable[i]);
    check_count(prunable[i], entry.pruned, w.size());
    const auto order = magnitude_order(w.data());
    auto data = out.layers[prunable[i]].weight->data();
    for (std::size_t k = 0; k < entry.pruned; ++k) data[order[k]] = 0.0f;
  }
  return out;
}

std::vector<std::size_t> zero_counts(const ModelGraph& model) {
  std::vector<std::size_t> out;
  for (auto li : model.prunable_layers()) {
    const auto w = model.layers[li].weight->data();
    out.push_back(static_cast<std::size_t>(
        std::count_if(w.begin(), w.end(), [](float v) { return v == 0.0f; })));
  }
  return out;
}

}  // namespace rdprune
