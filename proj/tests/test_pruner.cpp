#include <gtest/gtest.h>

#include "rdprune/allocator.hpp"
#include "rdprune/error.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/io.hpp"
#include "rdprune/pruner.hpp"
#include "rdprune/rd_curve.hpp"
#include "support.hpp"

using namespace rdprune;

namespace {

ModelGraph four_weights() {
  ModelGraph m;
  m.input_shape = {4};
  LayerSpec d;
  d.kind = LayerKind::dense;
  d.weight = Tensor({1, 4}, {0.5f, -2.0f, 0.1f, 1.0f});
  m.layers = {d};
  return m;
}

}  // namespace

TEST(Pruner, SmallestMagnitudesGo) {
  const auto m = four_weights();
  const auto p = prune_layer(m, 0, 2);
  EXPECT_EQ(*p.layers[0].weight, Tensor({1, 4}, {0.0f, -2.0f, 0.0f, 1.0f}));
  EXPECT_EQ(*m.layers[0].weight, Tensor({1, 4}, {0.5f, -2.0f, 0.1f, 1.0f}));
}

TEST(Pruner, Extremes) {
  const auto m = testsupport::tiny_mlp(false);
  const auto none = prune_layer(m, 2, 0);
  EXPECT_EQ(none.layers[2].weight, m.layers[2].weight);
  const auto all = prune_layer(m, 0, 12);
  for (float v : all.layers[0].weight->data()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(all.layers[2].weight, m.layers[2].weight);
  EXPECT_EQ(all.layers[0].bias, m.layers[0].bias);
  EXPECT_THROW(prune_layer(m, 0, 13), ArgumentError);
  EXPECT_THROW(prune_layer(m, 1, 0), ArgumentError);
  EXPECT_THROW(prune_layer(m, 7, 0), ArgumentError);
}

TEST(Pruner, TiesGoToLowerIndex) {
  const std::vector<float> w{1.0f, -0.5f, 0.5f, -1.0f, 0.5f};
  EXPECT_EQ(magnitude_order(w), (std::vector<std::uint32_t>{1, 2, 4, 0, 3}));
  ModelGraph m;
  m.input_shape = {5};
  LayerSpec d;
  d.kind = LayerKind::dense;
  d.weight = Tensor({1, 5}, w);
  m.layers = {d};
  const auto mask = magnitude_mask(m, 0, 2);
  EXPECT_EQ(mask.pruned_count(), 2u);
  EXPECT_EQ(mask.kept, (std::vector<bool>{true, false, false, true, true}));
}

TEST(Pruner, ZeroPlanIsIdentity) {
  const auto model = io::load_model(testsupport::fixture("cnn_toy"));
  const auto calib = io::load_calib(testsupport::fixture("cnn_toy") / "calib.bin");
  AllocationPlan plan;
  for (auto idx : model.prunable_layers())
    plan.layers.push_back({idx, model.layers[idx].weight->size(), 0, 0});
  const auto same = apply_plan(model, plan);
  for (std::size_t i = 0; i < model.layers.size(); ++i)
    EXPECT_EQ(same.layers[i].weight, model.layers[i].weight);
  EXPECT_EQ(measure_distortion(model, same, calib, DistortionMode::mean), 0.0);
}

TEST(Pruner, FullFirstLayerMatchesCurveEndpoint) {
  const auto model = io::load_model(testsupport::fixture("mlp_toy"));
  auto calib = io::load_calib(testsupport::fixture("mlp_toy") / "calib.bin");
  const auto grid = SparsityGrid::for_model(model, 4);
  AllocationPlan plan;
  for (std::size_t i = 0; i < grid.layer_count(); ++i) {
    const auto idx = model.prunable_layers()[i];
    plan.layers.push_back({idx, grid.layer_size(i), i == 0 ? grid.layer_size(0) : 0,
                           i == 0 ? std::size_t{4} : 0});
  }
  const auto pruned = apply_plan(model, plan);
  for (float v : pruned.layers[0].weight->data()) EXPECT_EQ(v, 0.0f);
  const double direct = measure_distortion(model, pruned, calib, DistortionMode::mean);
  const DenseReference ref(model, calib);
  const auto curve = gen_curve(ref, grid, 0, DistortionMode::mean);
  EXPECT_EQ(curve.points.back().distortion, direct);
  double by_hand = 0.0;
  for (const auto& x : calib.samples) by_hand += output_sq_error(model, pruned, x);
  EXPECT_NEAR(direct, by_hand / double(calib.size()), 1e-9 * by_hand);
}

TEST(Pruner, PlanAchievesRequestedSparsity) {
  const auto model = testsupport::tiny_mlp(false);
  const auto calib = gen_white_noise_calib({4}, 16, 3);
  const auto grid = SparsityGrid::for_model(model, 6);
  const auto curves = gen_all_curves(model, grid, calib);
  const auto budget = make_budget(grid, 0.5, {});
  const auto alloc = allocate(curves, grid, budget);
  const auto pruned = apply_plan(model, alloc.plan);
  const auto zeros = zero_counts(pruned);
  std::size_t total = 0;
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    EXPECT_GE(zeros[i], alloc.plan.layers[i].pruned);
    total += zeros[i];
  }
  EXPECT_EQ(total, alloc.plan.achieved_total);
  const double tol = double(grid.layer_count() * budget.unit) / double(grid.total_size());
  EXPECT_NEAR(double(total) / double(grid.total_size()), 0.5, tol);
  // Applying twice changes nothing: counts are absolute.
  EXPECT_EQ(zero_counts(apply_plan(pruned, alloc.plan)), zeros);
}

TEST(Pruner, PlanMustMatchModel) {
  const auto model = testsupport::tiny_mlp(false);
  AllocationPlan plan;
  plan.layers = {{0, 12, 1, 1}};
  EXPECT_THROW(apply_plan(model, plan), ArgumentError);
  plan.layers = {{1, 12, 1, 1}, {2, 6, 0, 0}};
  EXPECT_THROW(apply_plan(model, plan), ArgumentError);
}
