#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rdprune/allocator.hpp"
#include "rdprune/calibration.hpp"
#include "rdprune/model.hpp"
#include "rdprune/rd_curve.hpp"

namespace rdprune {

struct EnumerationGuard {
  std::size_t max_layers = 6;
  std::size_t max_levels = 10;
};

/// Exhaustive reference for allocate(): scans every tuple of valid grid
/// indices, keeping those with the largest bin count not above B (B itself
/// whenever reachable). Among equal objectives the tuple that is
/// lexicographically smallest in (j_l, ..., j_1) wins, the order the DP's
/// backtracking produces. Throws GuardError beyond the guard and
/// InfeasibleError when no tuple fits.
AllocationPlan brute_force_allocate(const std::vector<RDCurve>& curves,
                                    const SparsityGrid& grid, const BudgetSpec& budget,
                                    const EnumerationGuard& guard = {});

struct AdditivityRecord {
  std::vector<std::size_t> layers;  // model layer positions
  double sparsity = 0.0;
  double sum_individual = 0.0;
  double joint = 0.0;
  double relative_residual = 0.0;
};

inline constexpr double kResidualEpsilon = 1e-12;

/// Joint distortion with every layer in `prunable_set` (indices into the
/// model's prunable layers) pruned to round(sparsity * n_i), next to the sum
/// of the single-layer distortions at the same sparsity.
AdditivityRecord measure_additivity(const ModelGraph& model,
                                    const std::vector<std::size_t>& prunable_set,
                                    double sparsity, const CalibrationSet& calib,
                                    DistortionMode mode = DistortionMode::mean);

struct SweepRow {
  double sparsity = 0.0;
  double mean_relative_residual = 0.0;
};

struct SweepResult {
  std::vector<AdditivityRecord> records;  // sparsity-major, then pair order
  std::vector<SweepRow> summary;
};

/// measure_additivity over all adjacent prunable-layer pairs at each sparsity.
SweepResult approximation_error_sweep(const ModelGraph& model, const CalibrationSet& calib,
                                      std::span<const double> sparsities,
                                      DistortionMode mode = DistortionMode::mean);

/// Sparsities 0.1, 0.2, ..., 0.9.
std::vector<double> default_sweep_sparsities();

double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace rdprune
