#pragma once

#include <cstddef>
#include <vector>

namespace rdprune {

struct PlanEntry {
  std::size_t layer_index = 0;  // position in ModelGraph::layers
  std::size_t size = 0;         // n_i
  std::size_t pruned = 0;       // p_i, total zeroed weights after the plan
  std::size_t grid_index = 0;   // j with c_i(j) == pruned

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Per-layer prune counts chosen for a global budget.
struct AllocationPlan {
  std::vector<PlanEntry> layers;
  std::size_t total_prunable = 0;
  std::size_t requested_total = 0;  // T
  std::size_t achieved_total = 0;   // sum of p_i
  double ratio = 0.0;               // R
  std::size_t unit = 1;
  std::size_t bins = 0;             // bins consumed; B unless B was unreachable
  double objective = 0.0;           // sum of curve distortions at the chosen points

  double achieved_sparsity() const {
    return total_prunable == 0 ? 0.0
                               : static_cast<double>(achieved_total) /
                                     static_cast<double>(total_prunable);
  }

  friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

}  // namespace rdprune
