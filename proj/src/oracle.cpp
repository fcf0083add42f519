#include "rdprune/oracle.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <set>

#include "rdprune/error.hpp"
#include "rdprune/pruner.hpp"

namespace rdprune {

AllocationPlan brute_force_allocate(const std::vector<RDCurve>& curves,
                                    const SparsityGrid& grid, const BudgetSpec& budget,
                                    const EnumerationGuard& guard) {
  if (curves.empty()) throw ArgumentError("allocation needs at least one curve");
  if (curves.size() > guard.max_layers || grid.levels() > guard.max_levels)
    throw GuardError("exhaustive enumeration limited to " + std::to_string(guard.max_layers) +
                     " layers and S <= " + std::to_string(guard.max_levels) + " (got " +
                     std::to_string(curves.size()) + " layers, S = " +
                     std::to_string(grid.levels()) + ")");
  check_curves(curves, grid);
  if (budget.unit == 0) throw ArgumentError("budget unit must be >= 1");

  const std::size_t l = curves.size();
  std::vector<std::vector<std::size_t>> valid(l);
  for (std::size_t i = 0; i < l; ++i)
    for (const auto& p : curves[i].points)
      if (p.valid) valid[i].push_back(p.grid_index);

  std::size_t top = 0;
  for (std::size_t i = 0; i < l; ++i) {
    if (valid[i].empty()) throw InfeasibleError("layer " + std::to_string(i) + " has no valid grid point");
    top += grid.added(i, valid[i].back());
  }
  if (top < budget.added()) throw InfeasibleError("valid grid points cannot reach the budget");

  std::vector<std::size_t> digit(l, 0);
  std::vector<std::size_t> tuple(l), best;
  std::size_t best_bins = 0;
  double best_value = std::numeric_limits<double>::infinity();
  // Lexicographic comparison from the last layer down.
  auto reverse_less = [l](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    for (std::size_t i = l; i-- > 0;)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  };

  while (true) {
    std::size_t bins = 0;
    double value = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
      tuple[i] = valid[i][digit[i]];
      bins += budget.bins_for(grid.added(i, tuple[i]));
      value += curves[i].points[tuple[i]].distortion;
    }
    // Largest bin count not above B first, then objective, then tie order.
    if (bins <= budget.bins &&
        (best.empty() || bins > best_bins ||
         (bins == best_bins &&
          (value < best_value || (value == best_value && reverse_less(tuple, best)))))) {
      best_value = value;
      best_bins = bins;
      best = tuple;
    }
    std::size_t i = 0;
    while (i < l && ++digit[i] == valid[i].size()) digit[i++] = 0;
    if (i == l) break;
  }

  if (best.empty()) throw InfeasibleError("no tuple of valid grid points fits the budget");
  return make_plan(curves, grid, budget, best);
}

namespace {

AdditivityRecord measure_with(const DenseReference& reference,
                              const std::vector<std::size_t>& prunable_set, double sparsity,
                              DistortionMode mode) {
  const ModelGraph& model = reference.model();
  const auto prunable = model.prunable_layers();
  if (prunable_set.empty()) throw ArgumentError("additivity needs at least one layer");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw ArgumentError("sparsity must lie in [0, 1]");
  if (std::set<std::size_t>(prunable_set.begin(), prunable_set.end()).size() != prunable_set.size())
    throw ArgumentError("additivity layers must be distinct");

  AdditivityRecord rec;
  rec.sparsity = sparsity;
  ModelGraph joint = model;
  std::size_t first = model.layers.size();
  for (auto p : prunable_set) {
    if (p >= prunable.size())
      throw ArgumentError("prunable layer " + std::to_string(p) + " out of range");
    const std::size_t li = prunable[p];
    const std::size_t n = model.layers[li].weight->size();
    const auto k = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(n)));
    rec.layers.push_back(li);
    rec.sum_individual += reference.distortion(prune_layer(model, li, k), li, mode);
    joint = prune_layer(joint, li, k);
    first = std::min(first, li);
  }
  rec.joint = reference.distortion(joint, first, mode);
  rec.relative_residual =
      std::fabs(rec.joint - rec.sum_individual) / std::max(rec.joint, kResidualEpsilon);
  return rec;
}

}  // namespace

AdditivityRecord measure_additivity(const ModelGraph& model,
                                    const std::vector<std::size_t>& prunable_set,
                                    double sparsity, const CalibrationSet& calib,
                                    DistortionMode mode) {
  const DenseReference reference(model, calib);
  return measure_with(reference, prunable_set, sparsity, mode);
}

std::vector<double> default_sweep_sparsities() {
  std::vector<double> out;
  for (int i = 1; i <= 9; ++i) out.push_back(i / 10.0);
  return out;
}

SweepResult approximation_error_sweep(const ModelGraph& model, const CalibrationSet& calib,
                                      std::span<const double> sparsities,
                                      DistortionMode mode) {
  const DenseReference reference(model, calib);
  const std::size_t l = model.prunable_layers().size();
  SweepResult result;
  if (l < 2) return result;
  for (double s : sparsities) {
    double residual_sum = 0.0;
    for (std::size_t p = 0; p + 1 < l; ++p) {
      result.records.push_back(measure_with(reference, {p, p + 1}, s, mode));
      residual_sum += result.records.back().relative_residual;
    }
    result.summary.push_back({s, residual_sum / static_cast<double>(l - 1)});
  }
  return result;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ArgumentError("correlation needs two equally long series of >= 2 values");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace rdprune
