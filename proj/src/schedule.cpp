#include "rdprune/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "rdprune/error.hpp"
#include "rdprune/pruner.hpp"

namespace rdprune {

ScheduleResult iterative_schedule(const ModelGraph& model, const CalibrationSet& calib,
                                  std::size_t rounds, double per_round_fraction,
                                  const ScheduleOptions& options) {
  if (rounds == 0) throw ArgumentError("iterative schedule needs rounds >= 1");
  if (!(per_round_fraction > 0.0 && per_round_fraction < 1.0))
    throw ArgumentError("per-round fraction must lie in (0, 1)");

  ScheduleResult result;
  result.model = model;
  const double total = static_cast<double>(model.total_prunable());
  for (std::size_t r = 1; r <= rounds; ++r) {
    ScheduleRound round;
    round.round = r;
    round.target_sparsity = 1.0 - std::pow(1.0 - per_round_fraction, static_cast<double>(r));

    try {
      const auto grid = SparsityGrid::for_model(result.model, options.levels, true);
      const auto curves = gen_all_curves(result.model, grid, calib, options.curves);
      // A previous round may have overshot this round's target by less than
      // one bin; never ask to restore pruned weights.
      const auto wanted = static_cast<std::size_t>(std::llround(round.target_sparsity * total));
      auto budget =
          make_budget_for_total(grid, std::max(wanted, grid.total_base()), options.budget);
      budget.ratio = round.target_sparsity;
      round.plan = allocate(curves, grid, budget, options.solver).plan;
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("round " + std::to_string(r) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("round " + std::to_string(r) + ": " + e.what());
    }

    result.model = apply_plan(result.model, round.plan);
    round.achieved_sparsity = round.plan.achieved_sparsity();
    result.rounds.push_back(std::move(round));
  }
  return result;
}

}  // namespace rdprune
