// rdprune command-line tool. Artifacts go to --out; human summaries and
// timings go to stderr so artifacts stay byte-identical across runs.
#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/engine.hpp"
#include "rdprune/error.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/io.hpp"
#include "rdprune/oracle.hpp"
#include "rdprune/pruner.hpp"
#include "rdprune/rd_curve.hpp"
#include "rdprune/schedule.hpp"
#include "rdprune/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rdprune;

namespace {

enum Exit { kOk = 0, kOther = 1, kInfeasible = 2, kIo = 3, kGuard = 4 };

struct Config {
  std::string model;
  std::string reference;
  std::string calib;
  std::string white_noise;
  std::string curves;
  std::string plan;
  std::size_t grid = 100;
  std::size_t verify_grid = 8;  // enumeration stays within the guard
  std::string mode = "mean";
  bool filter = true;
  double ratio = 0.0;
  std::string solver = "exhaustive";
  std::optional<std::size_t> bins;
  std::optional<std::size_t> unit;
  std::string out = ".";
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool dp_trace = false;
  std::size_t rounds = 5;
  double fraction = 0.2;
  std::size_t random_instances = 0;
};

DistortionMode parse_mode(const std::string& s) {
  if (s == "mean") return DistortionMode::mean;
  if (s == "worst" || s == "worst-case") return DistortionMode::worst_case;
  throw ArgumentError("unknown mode '" + s + "'");
}

Solver parse_solver(const std::string& s) {
  if (s == "exhaustive") return Solver::exhaustive;
  if (s == "ternary") return Solver::ternary;
  throw ArgumentError("unknown solver '" + s + "'");
}

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw ArgumentError(fmt::format("bad {} '{}'", what, s));
  return static_cast<std::size_t>(v);
}

// SHAPE,COUNT[,SEED] with SHAPE like 1x28x28.
CalibrationSet white_noise_from_spec(const std::string& spec, std::uint64_t default_seed) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.size() < 2 || parts.size() > 3)
    throw ArgumentError("--white-noise expects SHAPE,COUNT[,SEED]");
  Shape shape;
  std::stringstream dims(parts[0]);
  for (std::string d; std::getline(dims, d, 'x');) shape.push_back(parse_size(d, "dimension"));
  const std::size_t count = parse_size(parts[1], "sample count");
  const std::uint64_t seed = parts.size() == 3 ? parse_size(parts[2], "seed") : default_seed;
  return gen_white_noise_calib(shape, count, seed);
}

CalibrationSet calibration(const Config& cfg, const ModelGraph& model) {
  CalibrationSet calib;
  if (!cfg.calib.empty())
    calib = io::load_calib(cfg.calib);
  else if (!cfg.white_noise.empty())
    calib = white_noise_from_spec(cfg.white_noise, cfg.seed);
  else
    throw ArgumentError("one of --calib or --white-noise is required");
  if (calib.sample_shape() != model.input_shape)
    throw ShapeError(-1, "calibration samples are " + shape_str(calib.sample_shape()) +
                             " but the model expects " + shape_str(model.input_shape));
  return calib;
}

BudgetOptions budget_options(const Config& cfg) { return {cfg.unit, cfg.bins}; }

CurveOptions curve_options(const Config& cfg) {
  CurveOptions o;
  o.mode = parse_mode(cfg.mode);
  o.filter = cfg.filter;
  o.threads = cfg.threads;
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path out_dir(const Config& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void print_plan(const AllocationPlan& plan) {
  fmt::print(stderr, "{:>6} {:>10} {:>10} {:>6} {:>9}\n", "layer", "size", "pruned", "j",
             "sparsity");
  for (const auto& e : plan.layers)
    fmt::print(stderr, "{:>6} {:>10} {:>10} {:>6} {:>9.4f}\n", e.layer_index, e.size,
               e.pruned, e.grid_index,
               e.size ? static_cast<double>(e.pruned) / static_cast<double>(e.size) : 0.0);
  fmt::print(stderr, "requested {} achieved {} of {} (sparsity {:.4f}), unit {}, bins {}, objective {}\n",
             plan.requested_total, plan.achieved_total, plan.total_prunable,
             plan.achieved_sparsity(), plan.unit, plan.bins, plan.objective);
}

int cmd_curves(const Config& cfg) {
  const auto model = io::load_model(cfg.model);
  const auto calib = calibration(cfg, model);
  const auto grid = SparsityGrid::for_model(model, cfg.grid, true);
  const auto t0 = std::chrono::steady_clock::now();
  const auto curves = gen_all_curves(model, grid, calib, curve_options(cfg));
  const double secs = seconds_since(t0);
  const auto dir = out_dir(cfg);
  io::write_curves_csv(curves, dir / "curves.csv");
  std::size_t invalid = 0;
  for (const auto& c : curves)
    for (const auto& p : c.points) invalid += !p.valid;
  fmt::print(stderr, "{} layers, S={}, mode {}, {} samples, {} filtered points, {:.3f} s\n",
             curves.size(), cfg.grid, cfg.mode, calib.size(), invalid, secs);
  return kOk;
}

int cmd_allocate(const Config& cfg) {
  std::vector<RDCurve> curves;
  SparsityGrid grid;
  const auto dir = out_dir(cfg);
  if (!cfg.curves.empty()) {
    curves = io::read_curves_csv(cfg.curves);
    grid = grid_from_curves(curves);
  } else {
    if (cfg.model.empty()) throw ArgumentError("allocate needs --curves or --model");
    const auto model = io::load_model(cfg.model);
    const auto calib = calibration(cfg, model);
    grid = SparsityGrid::for_model(model, cfg.grid, true);
    curves = gen_all_curves(model, grid, calib, curve_options(cfg));
    io::write_curves_csv(curves, dir / "curves.csv");
  }
  const auto budget = make_budget(grid, cfg.ratio, budget_options(cfg));
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = allocate(curves, grid, budget, parse_solver(cfg.solver));
  const double secs = seconds_since(t0);
  io::write_plan_json(result.plan, dir / "plan.json");
  if (cfg.dp_trace) io::write_dp_trace_csv(result.table, dir / "dp_trace.csv");
  print_plan(result.plan);
  fmt::print(stderr, "allocation time {:.6f} s ({} evaluations, solver {})\n", secs,
             result.evaluations, cfg.solver);
  return kOk;
}

int cmd_prune(const Config& cfg) {
  const auto model = io::load_model(cfg.model);
  const auto plan = io::read_plan_json(cfg.plan);
  const auto pruned = apply_plan(model, plan);
  io::save_model(pruned, out_dir(cfg));
  std::size_t zeros = 0;
  for (auto z : zero_counts(pruned)) zeros += z;
  fmt::print(stderr, "pruned model written to {} ({} of {} weights zero)\n", cfg.out, zeros,
             pruned.total_prunable());
  return kOk;
}

int cmd_eval(const Config& cfg) {
  const auto model = io::load_model(cfg.model);
  const auto reference = cfg.reference.empty() ? model : io::load_model(cfg.reference);
  const auto calib = calibration(cfg, reference);
  const double mean = measure_distortion(reference, model, calib, DistortionMode::mean);
  const double worst = measure_distortion(reference, model, calib, DistortionMode::worst_case);
  const std::string report =
      fmt::format("{{\"samples\": {}, \"mean\": {}, \"worst_case\": {}}}\n", calib.size(),
                  mean, worst);
  fmt::print("{}", report);
  if (cfg.out != ".") io::write_text(out_dir(cfg) / "eval.json", report);
  return kOk;
}

std::string join_indices(const AllocationPlan& plan) {
  std::vector<std::size_t> j;
  for (const auto& e : plan.layers) j.push_back(e.grid_index);
  return fmt::format("{}", fmt::join(j, ";"));
}

struct AuditRow {
  std::string label;
  double ratio = 0.0;
  std::size_t layers = 0, levels = 0, bins = 0;
  std::string dp, oracle;
  bool match = false;
};

AuditRow audit(const std::string& label, const std::vector<RDCurve>& curves,
               const SparsityGrid& grid, const BudgetSpec& budget) {
  AuditRow row{label, budget.ratio, grid.layer_count(), grid.levels(), budget.bins, "", "", false};
  std::optional<AllocationPlan> dp, bf;
  try {
    dp = allocate(curves, grid, budget).plan;
  } catch (const InfeasibleError&) {
  }
  try {
    bf = brute_force_allocate(curves, grid, budget);
  } catch (const InfeasibleError&) {
  }
  row.dp = dp ? fmt::format("{}:{}", dp->objective, join_indices(*dp)) : "infeasible";
  row.oracle = bf ? fmt::format("{}:{}", bf->objective, join_indices(*bf)) : "infeasible";
  row.match = row.dp == row.oracle;
  return row;
}

int cmd_verify(const Config& cfg) {
  const auto model = io::load_model(cfg.model);
  const auto calib = calibration(cfg, model);
  const auto grid = SparsityGrid::for_model(model, cfg.verify_grid, true);
  const EnumerationGuard guard;
  if (grid.layer_count() > guard.max_layers || grid.levels() > guard.max_levels)
    throw GuardError(fmt::format("verify enumerates l={} S={}; the limit is l<={} S<={}",
                                 grid.layer_count(), grid.levels(), guard.max_layers,
                                 guard.max_levels));
  const auto curves = gen_all_curves(model, grid, calib, curve_options(cfg));
  std::vector<AuditRow> rows;
  std::vector<double> ratios;
  if (cfg.ratio > 0.0)
    ratios.push_back(cfg.ratio);
  else
    ratios = default_sweep_sparsities();
  for (double r : ratios)
    rows.push_back(audit("model", curves, grid, make_budget(grid, r, budget_options(cfg))));
  for (std::size_t k = 0; k < cfg.random_instances; ++k) {
    SplitMix64 rng(cfg.seed + k);
    SyntheticOptions o;
    o.layers = 1 + rng.next() % guard.max_layers;
    o.levels = 1 + rng.next() % guard.max_levels;
    o.max_size = 40;
    o.noise = 0.2;
    auto inst = random_instance(rng.next(), o);
    for (auto& c : inst.curves) c = filter_outliers(c);
    const double r = static_cast<double>(rng.next() % 101) / 100.0;
    BudgetOptions bo;
    if (rng.next() % 2) bo.unit = 1;
    rows.push_back(audit(fmt::format("random{}", k), inst.curves, inst.grid,
                         make_budget(inst.grid, r, bo)));
  }
  const auto dir = out_dir(cfg);
  std::string csv = "case,ratio,layers,levels,bins,dp,oracle,match\n";
  bool all = true;
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", r.label, r.ratio, r.layers, r.levels,
                       r.bins, r.dp, r.oracle, r.match ? 1 : 0);
    all = all && r.match;
  }
  io::write_text(dir / "oracle_audit.csv", csv);

  const auto sparsities = default_sweep_sparsities();
  const auto sweep = approximation_error_sweep(model, calib, sparsities, parse_mode(cfg.mode));
  io::write_additivity_csv(sweep.records, dir / "additivity.csv");
  std::vector<double> sums, joints;
  for (const auto& rec : sweep.records) {
    sums.push_back(rec.sum_individual);
    joints.push_back(rec.joint);
  }
  if (sums.size() >= 2)
    fmt::print(stderr, "additivity: {} pairs, pearson(sum, joint) = {:.4f}\n",
               sweep.records.size() / sparsities.size(), pearson_correlation(sums, joints));
  for (const auto& row : sweep.summary)
    fmt::print(stderr, "  sparsity {:.1f}: mean relative residual {:.4g}\n", row.sparsity,
               row.mean_relative_residual);
  fmt::print("oracle match: {} ({} instances)\n", all ? "PASS" : "FAIL", rows.size());
  return all ? kOk : kOther;
}

int cmd_iterate(const Config& cfg) {
  const auto model = io::load_model(cfg.model);
  const auto calib = calibration(cfg, model);
  ScheduleOptions opts;
  opts.levels = cfg.grid;
  opts.curves = curve_options(cfg);
  opts.solver = parse_solver(cfg.solver);
  opts.budget = budget_options(cfg);
  const auto result = iterative_schedule(model, calib, cfg.rounds, cfg.fraction, opts);
  const auto dir = out_dir(cfg);
  std::string csv = "round,target_sparsity,achieved_sparsity,objective\n";
  for (const auto& r : result.rounds) {
    io::write_plan_json(r.plan, dir / fmt::format("round_{:02}", r.round) / "plan.json");
    csv += fmt::format("{},{},{},{}\n", r.round, r.target_sparsity, r.achieved_sparsity,
                       r.plan.objective);
    fmt::print(stderr, "round {:>2}: target {:.4f} achieved {:.4f}\n", r.round,
               r.target_sparsity, r.achieved_sparsity);
  }
  io::write_text(dir / "schedule.csv", csv);
  io::save_model(result.model, dir / "model");
  return kOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rdprune");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("RDPRUNE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Config cfg;
  CLI::App app{"Layer-adaptive magnitude pruning from rate-distortion curves"};
  app.require_subcommand(1);

  auto add_model = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--model", cfg.model, "model directory or model.json");
    if (required) o->required();
  };
  auto add_calib = [&](CLI::App* sub) {
    auto* c = sub->add_option("--calib", cfg.calib, "calib.bin");
    auto* w = sub->add_option("--white-noise", cfg.white_noise,
                              "synthetic calibration SHAPE,COUNT[,SEED], e.g. 1x8x8,256,7");
    c->excludes(w);
    sub->add_option("--seed", cfg.seed, "seed used when --white-noise omits one");
  };
  auto add_curve_flags = [&](CLI::App* sub, std::size_t& grid) {
    sub->add_option("--grid", grid, "grid levels S")->capture_default_str();
    sub->add_option("--mode", cfg.mode, "distortion aggregation")
        ->check(CLI::IsMember({"mean", "worst", "worst-case"}))
        ->capture_default_str();
    sub->add_flag("--filter,!--no-filter", cfg.filter, "mark outlier curve points invalid");
    sub->add_option("--threads", cfg.threads, "curve workers (0: all cores)");
  };
  auto add_budget = [&](CLI::App* sub, bool ratio_required) {
    auto* r = sub->add_option("--ratio", cfg.ratio, "global sparsity R")
                  ->check(CLI::Range(0.0, 1.0));
    if (ratio_required) r->required();
    sub->add_option("--solver", cfg.solver)
        ->check(CLI::IsMember({"exhaustive", "ternary"}))
        ->capture_default_str();
    auto* b = sub->add_option("--bins", cfg.bins, "budget bins B");
    auto* u = sub->add_option("--unit", cfg.unit, "weights per budget bin");
    b->excludes(u);
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
  };

  auto* curves = app.add_subcommand("curves", "write per-layer rate-distortion curves");
  add_model(curves, true);
  add_calib(curves);
  add_curve_flags(curves, cfg.grid);
  add_out(curves);

  auto* alloc = app.add_subcommand("allocate", "allocate per-layer sparsity");
  alloc->add_option("--curves", cfg.curves, "curves.csv (otherwise generated)");
  add_model(alloc, false);
  add_calib(alloc);
  add_curve_flags(alloc, cfg.grid);
  add_budget(alloc, true);
  alloc->add_flag("--dp-trace", cfg.dp_trace, "also write dp_trace.csv");
  add_out(alloc);

  auto* prune = app.add_subcommand("prune", "apply a plan to a model");
  add_model(prune, true);
  prune->add_option("--plan", cfg.plan, "plan.json")->required();
  add_out(prune);

  auto* eval = app.add_subcommand("eval", "output distortion of a model against a reference");
  add_model(eval, true);
  eval->add_option("--reference", cfg.reference, "dense model (default: --model itself)");
  add_calib(eval);
  add_out(eval);

  auto* verify = app.add_subcommand("verify", "check the allocator against enumeration");
  add_model(verify, true);
  add_calib(verify);
  add_curve_flags(verify, cfg.verify_grid);
  add_budget(verify, false);
  verify->add_option("--random-instances", cfg.random_instances,
                     "additional random synthetic instances");
  add_out(verify);

  auto* iterate = app.add_subcommand("iterate", "iterative pruning schedule");
  add_model(iterate, true);
  add_calib(iterate);
  add_curve_flags(iterate, cfg.grid);
  add_budget(iterate, false);
  iterate->add_option("--rounds", cfg.rounds)->capture_default_str();
  iterate->add_option("--fraction", cfg.fraction, "fraction of remaining weights per round")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_out(iterate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kOther;
  }

  try {
    if (*curves) return cmd_curves(cfg);
    if (*alloc) return cmd_allocate(cfg);
    if (*prune) return cmd_prune(cfg);
    if (*eval) return cmd_eval(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*iterate) return cmd_iterate(cfg);
  } catch (const InfeasibleError& e) {
    spdlog::error("infeasible: {}", e.what());
    return kInfeasible;
  } catch (const GuardError& e) {
    spdlog::error("guard: {}", e.what());
    return kGuard;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const FormatError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const ShapeError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
  return kOther;
}
