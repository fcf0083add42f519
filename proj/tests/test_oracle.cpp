#include <gtest/gtest.h>

#include <cmath>

#include "rdprune/allocator.hpp"
#include "rdprune/error.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/io.hpp"
#include "rdprune/oracle.hpp"
#include "rdprune/synthetic.hpp"
#include "support.hpp"

using namespace rdprune;

TEST(BruteForce, TwoLayerExample) {
  const SparsityGrid grid(4, {4, 4});
  std::vector<RDCurve> curves(2);
  const double d[2][5] = {{0, 1, 2, 10, 20}, {0, 5, 6, 7, 8}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 5; ++j) curves[i].points.push_back({j, j, d[i][j], true});
  BudgetOptions o;
  o.unit = 1;
  const auto p = brute_force_allocate(curves, grid, make_budget_for_total(grid, 4, o));
  EXPECT_EQ(p.objective, 8.0);
  EXPECT_EQ(p.layers[0].grid_index, 2u);
  EXPECT_EQ(p.layers[1].grid_index, 2u);
}

TEST(BruteForce, MatchesDynamicProgramOnThreeLayers) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SyntheticOptions o;
    o.layers = 3;
    o.levels = 4;
    o.max_size = 12;
    const auto inst = random_instance(seed, o);
    const auto budget = make_budget(inst.grid, double(seed % 9 + 1) / 10.0);
    const auto dp = allocate(inst.curves, inst.grid, budget).plan;
    const auto bf = brute_force_allocate(inst.curves, inst.grid, budget);
    EXPECT_EQ(dp.objective, bf.objective) << seed;
    EXPECT_EQ(dp, bf) << seed;
  }
}

TEST(BruteForce, SingleLayerAgrees) {
  SyntheticOptions o;
  o.layers = 1;
  o.levels = 10;
  const auto inst = random_instance(5, o);
  const auto budget = make_budget(inst.grid, 0.6);
  EXPECT_EQ(brute_force_allocate(inst.curves, inst.grid, budget),
            allocate(inst.curves, inst.grid, budget).plan);
}

TEST(BruteForce, Guard) {
  SyntheticOptions o;
  o.layers = 7;
  o.levels = 4;
  auto inst = random_instance(1, o);
  EXPECT_THROW(brute_force_allocate(inst.curves, inst.grid, make_budget(inst.grid, 0.5)),
               GuardError);
  o.layers = 2;
  o.levels = 11;
  inst = random_instance(1, o);
  EXPECT_THROW(brute_force_allocate(inst.curves, inst.grid, make_budget(inst.grid, 0.5)),
               GuardError);
}

TEST(Additivity, DegenerateSets) {
  const auto model = io::load_model(testsupport::fixture("mlp_toy"));
  auto calib = io::load_calib(testsupport::fixture("mlp_toy") / "calib.bin");
  calib.samples.resize(16);
  const auto one = measure_additivity(model, {3}, 0.4, calib);
  EXPECT_EQ(one.joint, one.sum_individual);
  EXPECT_EQ(one.relative_residual, 0.0);
  EXPECT_EQ(one.layers, (std::vector<std::size_t>{model.prunable_layers()[3]}));
  const auto zero = measure_additivity(model, {0, 1}, 0.0, calib);
  EXPECT_EQ(zero.joint, 0.0);
  EXPECT_EQ(zero.sum_individual, 0.0);
  EXPECT_EQ(zero.relative_residual, 0.0);
  EXPECT_THROW(measure_additivity(model, {9}, 0.1, calib), ArgumentError);
}

TEST(Additivity, SweepShape) {
  const auto model = io::load_model(testsupport::fixture("mlp_toy"));
  auto calib = io::load_calib(testsupport::fixture("mlp_toy") / "calib.bin");
  calib.samples.resize(16);
  const std::vector<double> s{0.0, 0.1, 0.5};
  const auto sweep = approximation_error_sweep(model, calib, s);
  ASSERT_EQ(sweep.records.size(), 5u * 3u);
  ASSERT_EQ(sweep.summary.size(), 3u);
  EXPECT_EQ(sweep.summary[0].mean_relative_residual, 0.0);
  for (const auto& r : sweep.records) {
    EXPECT_EQ(r.layers.size(), 2u);
    const double expect = std::fabs(r.joint - r.sum_individual) / std::max(r.joint, kResidualEpsilon);
    EXPECT_EQ(r.relative_residual, expect);
  }
  EXPECT_EQ(default_sweep_sparsities().size(), 9u);
}

TEST(Additivity, Pearson) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, w{1, 3, 2, 4};
  EXPECT_DOUBLE_EQ(pearson_correlation(x, y), 1.0);
  EXPECT_DOUBLE_EQ(pearson_correlation(x, z), -1.0);
  EXPECT_DOUBLE_EQ(pearson_correlation(x, w), 0.8);
  EXPECT_THROW(pearson_correlation(x, std::vector<double>{1, 2}), ArgumentError);
}
