#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rdprune/allocator.hpp"
#include "rdprune/io.hpp"
#include "rdprune/synthetic.hpp"
#include "support.hpp"

using namespace rdprune;
using testsupport::run_cli;
using testsupport::scratch_dir;
namespace fs = std::filesystem;
using testsupport::slurp;

namespace {

std::string model_args(const std::string& name) {
  const auto dir = testsupport::fixture(name);
  return "--model " + dir.string() + " --calib " + (dir / "calib.bin").string();
}

std::size_t lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t invalid_rows(const fs::path& csv) {
  std::size_t n = 0;
  for (const auto& c : io::read_curves_csv(csv))
    for (const auto& p : c.points) n += !p.valid;
  return n;
}

}  // namespace

TEST(Cli, CurvesFileHasOneRowPerPoint) {
  const auto out = scratch_dir("cli_curves");
  ASSERT_EQ(run_cli("curves " + model_args("mlp_toy") + " --grid 4 --out " + out.string()), 0);
  EXPECT_EQ(lines(slurp(out / "curves.csv")), 1u + 5u * 6u);
}

TEST(Cli, ModesAgreeOnOneSample) {
  const auto out = scratch_dir("cli_modes");
  const auto calib = gen_white_noise_calib({16}, 1, 4);
  io::save_calib(calib, out / "one.bin");
  const std::string base = "curves --model " + testsupport::fixture("mlp_toy").string() +
                           " --calib " + (out / "one.bin").string() + " --grid 6 --out ";
  ASSERT_EQ(run_cli(base + (out / "mean").string() + " --mode mean"), 0);
  ASSERT_EQ(run_cli(base + (out / "worst").string() + " --mode worst"), 0);
  EXPECT_EQ(slurp(out / "mean/curves.csv"), slurp(out / "worst/curves.csv"));
}

TEST(Cli, FilterMarksAtLeastAsManyPoints) {
  const auto out = scratch_dir("cli_filter");
  const auto model = testsupport::random_model(31);
  io::save_model(model, out / "model");
  std::ostringstream shape;
  for (std::size_t i = 0; i < model.input_shape.size(); ++i)
    shape << (i ? "x" : "") << model.input_shape[i];
  const std::string base = "curves --model " + (out / "model").string() + " --white-noise " +
                           shape.str() + ",4,9 --grid 30 --out ";
  ASSERT_EQ(run_cli(base + (out / "f").string()), 0);
  ASSERT_EQ(run_cli(base + (out / "nf").string() + " --no-filter"), 0);
  EXPECT_EQ(invalid_rows(out / "nf/curves.csv"), 0u);
  EXPECT_GE(invalid_rows(out / "f/curves.csv"), invalid_rows(out / "nf/curves.csv"));
}

TEST(Cli, AllocateAndPrune) {
  const auto out = scratch_dir("cli_alloc");
  ASSERT_EQ(run_cli("curves " + model_args("cnn_toy") + " --grid 10 --out " + out.string()), 0);
  const auto curves_arg = " --curves " + (out / "curves.csv").string();

  ASSERT_EQ(run_cli("allocate" + curves_arg + " --ratio 0 --out " + (out / "r0").string()), 0);
  const auto zero = io::read_plan_json(out / "r0/plan.json");
  for (const auto& e : zero.layers) EXPECT_EQ(e.pruned, 0u);

  ASSERT_EQ(run_cli("allocate" + curves_arg + " --ratio 0.2 --dp-trace --out " +
                    (out / "r2").string()),
            0);
  const auto plan = io::read_plan_json(out / "r2/plan.json");
  const auto curves = io::read_curves_csv(out / "curves.csv");
  const auto grid = grid_from_curves(curves);
  const auto budget = make_budget(grid, 0.2);
  const auto v = testsupport::plan_violations(plan, curves, grid, budget);
  EXPECT_TRUE(v.empty()) << v.front();
  EXPECT_TRUE(fs::exists(out / "r2/dp_trace.csv"));

  ASSERT_EQ(run_cli("prune --model " + testsupport::fixture("cnn_toy").string() + " --plan " +
                    (out / "r2/plan.json").string() + " --out " + (out / "pruned").string()),
            0);
  std::string report;
  ASSERT_EQ(run_cli("eval --model " + (out / "pruned").string() + " --reference " +
                        model_args("cnn_toy").substr(8),
                    &report),
            0);
  EXPECT_GT(nlohmann::json::parse(report)["mean"].get<double>(), 0.0);
}

TEST(Cli, SolversAgreeOnConvexCurves) {
  const auto out = scratch_dir("cli_solver");
  SyntheticOptions o;
  o.layers = 5;
  o.levels = 20;
  o.convex = true;
  o.min_size = o.max_size = 40;
  io::write_curves_csv(random_instance(17, o).curves, out / "curves.csv");
  const std::string base = "allocate --curves " + (out / "curves.csv").string() + " --ratio 0.45";
  ASSERT_EQ(run_cli(base + " --solver exhaustive --out " + (out / "e").string()), 0);
  ASSERT_EQ(run_cli(base + " --solver ternary --out " + (out / "t").string()), 0);
  EXPECT_EQ(slurp(out / "e/plan.json"), slurp(out / "t/plan.json"));
}

TEST(Cli, EvalSelfIsZero) {
  std::string report;
  ASSERT_EQ(run_cli("eval " + model_args("resnet_tiny"), &report), 0);
  const auto j = nlohmann::json::parse(report);
  EXPECT_EQ(j["mean"].get<double>(), 0.0);
  EXPECT_EQ(j["worst_case"].get<double>(), 0.0);
}

TEST(Cli, VerifyPasses) {
  const auto out = scratch_dir("cli_verify");
  std::string text;
  ASSERT_EQ(run_cli("verify " + model_args("mlp_toy") + " --grid 6 --random-instances 20 --out " +
                        out.string(),
                    &text),
            0);
  EXPECT_NE(text.find("oracle match: PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "oracle_audit.csv"));
  EXPECT_EQ(lines(slurp(out / "additivity.csv")), 1u + 5u * 9u);
}

TEST(Cli, IterateWritesEveryRound) {
  const auto out = scratch_dir("cli_iter");
  ASSERT_EQ(run_cli("iterate " + model_args("mlp_toy") +
                    " --grid 20 --rounds 5 --fraction 0.2 --out " + out.string()),
            0);
  for (int r = 1; r <= 5; ++r) {
    char name[16];
    std::snprintf(name, sizeof name, "round_%02d", r);
    const auto plan = io::read_plan_json(out / name / "plan.json");
    const double want = 1.0 - std::pow(0.8, r);
    EXPECT_NEAR(plan.achieved_sparsity(), want,
                double(plan.layers.size() * plan.unit) / double(plan.total_prunable));
  }
  EXPECT_EQ(lines(slurp(out / "schedule.csv")), 6u);
  EXPECT_NO_THROW(io::load_model(out / "model"));
}

TEST(Cli, ExitCodes) {
  const auto out = scratch_dir("cli_exit");
  EXPECT_EQ(run_cli("curves --model /no/such/model --calib /no/calib.bin"), 3);
  EXPECT_EQ(run_cli("curves --model " + testsupport::fixture("mlp_toy").string() + " --calib " +
                    (testsupport::fixture("cnn_toy") / "calib.bin").string()),
            3);
  EXPECT_EQ(run_cli("verify " + model_args("mlp_toy") + " --grid 12 --out " + out.string()), 4);
  // Only j = 0 survives filtering, so any positive budget is infeasible.
  SyntheticOptions o;
  o.layers = 2;
  o.levels = 4;
  auto inst = random_instance(2, o);
  for (auto& c : inst.curves)
    for (std::size_t j = 1; j < c.points.size(); ++j) c.points[j].valid = false;
  io::write_curves_csv(inst.curves, out / "curves.csv");
  EXPECT_EQ(run_cli("allocate --curves " + (out / "curves.csv").string() + " --ratio 0.5 --out " +
                    out.string()),
            2);
  EXPECT_EQ(run_cli("allocate --ratio 2"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, RunsAreByteIdentical) {
  const auto out = scratch_dir("cli_det");
  const std::string args = "allocate --model " + testsupport::fixture("resnet_tiny").string() +
                           " --white-noise 1x8x8,32,5 --grid 12 --ratio 0.6 --out ";
  ASSERT_EQ(run_cli(args + (out / "a").string() + " --threads 1"), 0);
  ASSERT_EQ(run_cli(args + (out / "b").string() + " --threads 3"), 0);
  EXPECT_EQ(slurp(out / "a/curves.csv"), slurp(out / "b/curves.csv"));
  EXPECT_EQ(slurp(out / "a/plan.json"), slurp(out / "b/plan.json"));
}
