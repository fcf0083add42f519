#pragma once

#include <cstddef>
#include <vector>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/model.hpp"
#include "rdprune/rd_curve.hpp"

namespace rdprune {

struct ScheduleOptions {
  std::size_t levels = 100;
  CurveOptions curves;
  Solver solver = Solver::exhaustive;
  BudgetOptions budget;
};

struct ScheduleRound {
  std::size_t round = 0;          // 1-based
  double target_sparsity = 0.0;   // 1 - (1 - fraction)^round
  AllocationPlan plan;
  double achieved_sparsity = 0.0;
};

struct ScheduleResult {
  std::vector<ScheduleRound> rounds;
  ModelGraph model;  // after the last round
};

/// Iterative pruning without retraining: each round regenerates curves on
/// the current model, allocates the round's cumulative target and applies
/// the plan. Infeasibility in a round is rethrown naming the round.
ScheduleResult iterative_schedule(const ModelGraph& model, const CalibrationSet& calib,
                                  std::size_t rounds, double per_round_fraction,
                                  const ScheduleOptions& options = {});

}  // namespace rdprune
