#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rdprune/grid.hpp"
#include "rdprune/plan.hpp"
#include "rdprune/rd_curve.hpp"

namespace rdprune {

/// Global pruning budget quantised into bins of `unit` weights.
///
/// `total` (T) counts all pruned weights including the grid's base counts;
/// the allocator distributes the `total - base` newly pruned weights. Weight
/// counts map to bins by rounding to the nearest multiple of `unit` (halves
/// up): B = round((T - base) / unit), and a layer choice j consumes
/// round(added_i(j) / unit) bins. A plan consumes exactly B bins when valid
/// points allow it.
struct BudgetSpec {
  double ratio = 0.0;
  std::size_t total = 0;
  std::size_t base = 0;
  std::size_t unit = 1;
  std::size_t bins = 0;

  std::size_t added() const noexcept { return total - base; }
  std::size_t bins_for(std::size_t added_weights) const noexcept {
    return (2 * added_weights + unit) / (2 * unit);
  }
};

struct BudgetOptions {
  std::optional<std::size_t> unit;  // weights per bin
  std::optional<std::size_t> bins;  // target bin count; sets unit = ceil(added / bins)
};

/// Budget for global ratio R: T = round(R * total_prunable). Without
/// overrides the unit is the largest per-layer grid step (and at least
/// ceil(added / (10 l S))), which makes every bin count up to the maximum
/// reachable.
BudgetSpec make_budget(const SparsityGrid& grid, double ratio,
                       const BudgetOptions& options = {});
BudgetSpec make_budget_for_total(const SparsityGrid& grid, std::size_t total,
                                 const BudgetOptions& options = {});

/// g (minimal cumulative distortion) and s (chosen grid index, -1 when
/// unreachable) for rows i = 0..l and bins b = 0..B.
class DPTable {
 public:
  static constexpr double unreachable = std::numeric_limits<double>::infinity();

  DPTable() = default;
  DPTable(std::size_t layers, std::size_t bins);

  std::size_t layers() const noexcept { return layers_; }
  std::size_t bins() const noexcept { return bins_; }
  double& value(std::size_t i, std::size_t b) { return g_[i * (bins_ + 1) + b]; }
  double value(std::size_t i, std::size_t b) const { return g_[i * (bins_ + 1) + b]; }
  std::int32_t& decision(std::size_t i, std::size_t b) { return s_[i * (bins_ + 1) + b]; }
  std::int32_t decision(std::size_t i, std::size_t b) const { return s_[i * (bins_ + 1) + b]; }

 private:
  std::size_t layers_ = 0;
  std::size_t bins_ = 0;
  std::vector<double> g_;
  std::vector<std::int32_t> s_;
};

struct Allocation {
  AllocationPlan plan;
  DPTable table;
  /// Inner-loop candidate evaluations; bounded by l * (B + 1) * (S + 1).
  std::uint64_t evaluations = 0;
};

enum class Solver { exhaustive, ternary };

/// Minimises the sum of curve distortions subject to consuming exactly B
/// bins, by dynamic programming over layers. Only valid curve points are
/// candidates; ties go to the smallest grid index. When invalid points leave
/// B itself unreachable the plan uses the largest reachable count below B.
/// Throws InfeasibleError if the largest valid points together prune fewer
/// than T weights and ArgumentError on an empty curve set.
Allocation allocate(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                    const BudgetSpec& budget);

/// As allocate(), but each inner minimisation is a ternary search over the
/// candidate grid indices. Exact when every inner function is unimodal with
/// its minima contiguous (e.g. convex curves).
Allocation allocate_ternary(const std::vector<RDCurve>& curves,
                            const SparsityGrid& grid, const BudgetSpec& budget);

Allocation allocate(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                    const BudgetSpec& budget, Solver solver);

/// Plan picking grid index `indices[i]` for layer i; the objective sums the
/// curve distortions at those points in layer order.
AllocationPlan make_plan(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                         const BudgetSpec& budget,
                         const std::vector<std::size_t>& indices);

/// Same grid index for every layer, chosen so the pruned total is nearest to
/// the budget's T (ties to the smaller index). Ignores validity flags.
AllocationPlan uniform_plan(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                            const BudgetSpec& budget);

/// Bins consumed by a plan under `budget`'s unit.
std::size_t plan_bins(const AllocationPlan& plan, const SparsityGrid& grid,
                      const BudgetSpec& budget);

}  // namespace rdprune
