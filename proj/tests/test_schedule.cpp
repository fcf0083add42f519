#include <gtest/gtest.h>

#include <cmath>

#include "rdprune/allocator.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/io.hpp"
#include "rdprune/pruner.hpp"
#include "rdprune/schedule.hpp"
#include "support.hpp"

using namespace rdprune;

namespace {

struct Fixture {
  ModelGraph model;
  CalibrationSet calib;
};

Fixture mlp() {
  Fixture f{io::load_model(testsupport::fixture("mlp_toy")),
            io::load_calib(testsupport::fixture("mlp_toy") / "calib.bin")};
  f.calib.samples.resize(16);
  return f;
}

}  // namespace

TEST(Schedule, OneRoundIsOneShot) {
  const auto f = mlp();
  ScheduleOptions opts;
  opts.levels = 20;
  const auto sched = iterative_schedule(f.model, f.calib, 1, 0.2, opts);
  ASSERT_EQ(sched.rounds.size(), 1u);
  const auto grid = SparsityGrid::for_model(f.model, 20, true);
  const auto curves = gen_all_curves(f.model, grid, f.calib);
  const auto plan = allocate(curves, grid, make_budget(grid, 0.2)).plan;
  EXPECT_EQ(sched.rounds[0].plan.layers, plan.layers);
  EXPECT_EQ(sched.rounds[0].plan.objective, plan.objective);
}

TEST(Schedule, GeometricLadder) {
  const auto f = mlp();
  ScheduleOptions opts;
  opts.levels = 20;
  const auto sched = iterative_schedule(f.model, f.calib, 5, 0.2, opts);
  ASSERT_EQ(sched.rounds.size(), 5u);
  const double total = double(f.model.total_prunable());
  std::vector<std::size_t> last(6, 0);
  for (const auto& r : sched.rounds) {
    const double want = 1.0 - std::pow(0.8, double(r.round));
    EXPECT_DOUBLE_EQ(r.target_sparsity, want);
    const double tol = double(6 * r.plan.unit) / total;
    EXPECT_NEAR(r.achieved_sparsity, want, tol) << r.round;
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_GE(r.plan.layers[i].pruned, last[i]);  // pruned weights never come back
      last[i] = r.plan.layers[i].pruned;
    }
  }
  EXPECT_NEAR(sched.rounds[1].achieved_sparsity, 0.36, 6.0 * sched.rounds[1].plan.unit / total);
  EXPECT_NEAR(sched.rounds[4].achieved_sparsity, 0.67232, 6.0 * sched.rounds[4].plan.unit / total);
  std::size_t zeros = 0;
  for (auto z : zero_counts(sched.model)) zeros += z;
  EXPECT_EQ(zeros, sched.rounds.back().plan.achieved_total);
}
