#include "rdprune/allocator.hpp"

#include <algorithm>
#include <cmath>

#include "rdprune/error.hpp"

namespace rdprune {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

struct Candidate {
  std::size_t j;
  std::size_t bins;
  double distortion;
};

/// Valid points of each curve with their bin cost, ascending in j (and so
/// non-decreasing in bins).
std::vector<std::vector<Candidate>> candidates(const std::vector<RDCurve>& curves,
                                               const SparsityGrid& grid,
                                               const BudgetSpec& budget) {
  std::vector<std::vector<Candidate>> out(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (const auto& p : curves[i].points) {
      if (p.valid) out[i].push_back({p.grid_index, budget.bins_for(grid.added(i, p.grid_index)), p.distortion});
    }
  }
  std::size_t top = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].empty()) throw InfeasibleError("layer " + std::to_string(i) + " has no valid grid point");
    top += grid.added(i, out[i].back().j);
  }
  if (top < budget.added())
    throw InfeasibleError("valid grid points prune at most " + std::to_string(top) + " of the " +
                          std::to_string(budget.added()) + " requested weights");
  return out;
}

void check_inputs(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                  const BudgetSpec& budget) {
  if (curves.empty()) throw ArgumentError("allocation needs at least one curve");
  check_curves(curves, grid);
  if (budget.unit == 0) throw ArgumentError("budget unit must be >= 1");
  if (budget.base != grid.total_base())
    throw ArgumentError("budget base does not match the grid's already-pruned count");
  if (budget.total < budget.base)
    throw InfeasibleError("budget total is below the weights already pruned");
  if (budget.added() > grid.total_size() - grid.total_base())
    throw InfeasibleError("budget of " + std::to_string(budget.total) + " weights exceeds the " +
                          std::to_string(grid.total_size()) + " prunable weights");
}

// Gaps left by invalid points can make exactly B bins unreachable; the
// plan then consumes the largest reachable count below B, never more.
std::size_t reachable_target(const DPTable& table, const BudgetSpec& budget) {
  const std::size_t l = table.layers();
  for (std::size_t b = budget.bins + 1; b-- > 0;)
    if (table.value(l, b) != DPTable::unreachable) return b;
  throw InfeasibleError("no combination of valid grid points fits in " +
                        std::to_string(budget.bins) + " bins");
}

Allocation backtrack(DPTable table, const std::vector<RDCurve>& curves,
                     const SparsityGrid& grid, const BudgetSpec& budget,
                     std::uint64_t evaluations) {
  const std::size_t l = curves.size();
  const std::size_t B = reachable_target(table, budget);
  std::vector<std::size_t> indices(l);
  std::size_t b = B;
  for (std::size_t i = l; i >= 1; --i) {
    const auto j = table.decision(i, b);
    indices[i - 1] = static_cast<std::size_t>(j);
    b -= budget.bins_for(grid.added(i - 1, indices[i - 1]));
  }
  Allocation result;
  result.plan = make_plan(curves, grid, budget, indices);
  result.plan.objective = table.value(l, B);
  result.table = std::move(table);
  result.evaluations = evaluations;
  return result;
}

}  // namespace

BudgetSpec make_budget_for_total(const SparsityGrid& grid, std::size_t total,
                                 const BudgetOptions& options) {
  if (grid.layer_count() == 0) throw ArgumentError("budget needs a non-empty grid");
  if (total > grid.total_size())
    throw InfeasibleError("budget of " + std::to_string(total) + " weights exceeds the " +
                          std::to_string(grid.total_size()) + " prunable weights");
  if (total < grid.total_base())
    throw InfeasibleError("budget of " + std::to_string(total) +
                          " weights is below the " + std::to_string(grid.total_base()) +
                          " already pruned");
  BudgetSpec budget;
  budget.total = total;
  budget.base = grid.total_base();
  budget.ratio = grid.total_size() ? static_cast<double>(total) / grid.total_size() : 0.0;
  const std::size_t added = budget.added();
  if (options.unit) {
    if (*options.unit == 0) throw ArgumentError("unit must be >= 1");
    budget.unit = *options.unit;
  } else if (options.bins) {
    if (*options.bins == 0 && added > 0) throw ArgumentError("bins must be >= 1");
    budget.unit = added == 0 ? 1 : std::max<std::size_t>(1, ceil_div(added, *options.bins));
  } else {
    const std::size_t cap = 10 * grid.layer_count() * grid.levels();
    budget.unit = std::max({std::size_t{1}, grid.max_step(), ceil_div(added, cap)});
  }
  budget.bins = budget.bins_for(added);
  return budget;
}

BudgetSpec make_budget(const SparsityGrid& grid, double ratio, const BudgetOptions& options) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("pruning ratio must lie in [0, 1]");
  const auto total = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(grid.total_size())));
  BudgetSpec budget = make_budget_for_total(grid, total, options);
  budget.ratio = ratio;
  return budget;
}

DPTable::DPTable(std::size_t layers, std::size_t bins)
    : layers_(layers),
      bins_(bins),
      g_((layers + 1) * (bins + 1), unreachable),
      s_((layers + 1) * (bins + 1), -1) {}

Allocation allocate(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                    const BudgetSpec& budget) {
  check_inputs(curves, grid, budget);
  const auto cands = candidates(curves, grid, budget);
  const std::size_t l = curves.size();
  const std::size_t B = budget.bins;

  DPTable table(l, B);
  table.value(0, 0) = 0.0;
  std::uint64_t evaluations = 0;
  for (std::size_t i = 1; i <= l; ++i) {
    const auto& layer = cands[i - 1];
    for (std::size_t b = 0; b <= B; ++b) {
      double best = DPTable::unreachable;
      std::int32_t arg = -1;
      for (const auto& c : layer) {
        if (c.bins > b) break;
        ++evaluations;
        const double prev = table.value(i - 1, b - c.bins);
        if (prev == DPTable::unreachable) continue;
        const double v = prev + c.distortion;
        if (v < best) {
          best = v;
          arg = static_cast<std::int32_t>(c.j);
        }
      }
      table.value(i, b) = best;
      table.decision(i, b) = arg;
    }
  }
  return backtrack(std::move(table), curves, grid, budget, evaluations);
}

Allocation allocate_ternary(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                            const BudgetSpec& budget) {
  check_inputs(curves, grid, budget);
  const auto cands = candidates(curves, grid, budget);
  const std::size_t l = curves.size();
  const std::size_t B = budget.bins;

  DPTable table(l, B);
  table.value(0, 0) = 0.0;
  std::size_t reach = 0;  // largest reachable bin count in the previous row
  std::uint64_t evaluations = 0;
  for (std::size_t i = 1; i <= l; ++i) {
    const auto& layer = cands[i - 1];
    auto inner = [&](std::size_t pos, std::size_t b) {
      ++evaluations;
      const double prev = table.value(i - 1, b - layer[pos].bins);
      return prev == DPTable::unreachable ? prev : prev + layer[pos].distortion;
    };
    for (std::size_t b = 0; b <= B; ++b) {
      // Candidates with bins in [b - reach, b].
      const auto first = std::lower_bound(
          layer.begin(), layer.end(), b > reach ? b - reach : 0,
          [](const Candidate& c, std::size_t v) { return c.bins < v; });
      const auto last = std::upper_bound(
          layer.begin(), layer.end(), b,
          [](std::size_t v, const Candidate& c) { return v < c.bins; });
      if (first >= last) continue;
      std::size_t lo = static_cast<std::size_t>(first - layer.begin());
      std::size_t hi = static_cast<std::size_t>(last - layer.begin()) - 1;
      while (hi - lo > 2) {
        const std::size_t m1 = lo + (hi - lo) / 3;
        const std::size_t m2 = hi - (hi - lo) / 3;
        const double h1 = inner(m1, b);
        const double h2 = inner(m2, b);
        if (h1 < h2) {
          hi = m2 - 1;
        } else if (h1 > h2) {
          lo = m1 + 1;
        } else {
          hi = m2;
        }
      }
      double best = DPTable::unreachable;
      std::int32_t arg = -1;
      for (std::size_t p = lo; p <= hi; ++p) {
        const double v = inner(p, b);
        if (v < best) {
          best = v;
          arg = static_cast<std::int32_t>(layer[p].j);
        }
      }
      table.value(i, b) = best;
      table.decision(i, b) = arg;
    }
    for (std::size_t b = 0; b <= B; ++b)
      if (table.value(i, b) != DPTable::unreachable) reach = b;
  }
  return backtrack(std::move(table), curves, grid, budget, evaluations);
}

Allocation allocate(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                    const BudgetSpec& budget, Solver solver) {
  return solver == Solver::ternary ? allocate_ternary(curves, grid, budget)
                                   : allocate(curves, grid, budget);
}

AllocationPlan make_plan(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                         const BudgetSpec& budget, const std::vector<std::size_t>& indices) {
  if (indices.size() != curves.size() || curves.size() != grid.layer_count())
    throw ArgumentError("plan needs one grid index per curve");
  AllocationPlan plan;
  plan.total_prunable = grid.total_size();
  plan.requested_total = budget.total;
  plan.ratio = budget.ratio;
  plan.unit = budget.unit;
  double objective = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t j = indices[i];
    PlanEntry e;
    e.layer_index = curves[i].layer_index;
    e.size = grid.layer_size(i);
    e.pruned = grid.count(i, j);
    e.grid_index = j;
    plan.achieved_total += e.pruned;
    plan.bins += budget.bins_for(grid.added(i, j));
    objective += curves[i].points.at(j).distortion;
    plan.layers.push_back(e);
  }
  plan.objective = objective;
  return plan;
}

AllocationPlan uniform_plan(const std::vector<RDCurve>& curves, const SparsityGrid& grid,
                            const BudgetSpec& budget) {
  check_curves(curves, grid);
  std::size_t best_j = 0;
  std::size_t best_gap = SIZE_MAX;
  for (std::size_t j = 0; j <= grid.levels(); ++j) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < grid.layer_count(); ++i) total += grid.count(i, j);
    const std::size_t gap = total > budget.total ? total - budget.total : budget.total - total;
    if (gap < best_gap) {
      best_gap = gap;
      best_j = j;
    }
  }
  return make_plan(curves, grid, budget, std::vector<std::size_t>(curves.size(), best_j));
}

std::size_t plan_bins(const AllocationPlan& plan, const SparsityGrid& grid,
                      const BudgetSpec& budget) {
  std::size_t bins = 0;
  for (std::size_t i = 0; i < plan.layers.size(); ++i)
    bins += budget.bins_for(plan.layers[i].pruned - grid.base(i));
  return bins;
}

}  // namespace rdprune
