#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rdprune/calibration.hpp"
#include "rdprune/engine.hpp"
#include "rdprune/grid.hpp"
#include "rdprune/model.hpp"

namespace rdprune {

/// How per-sample squared output errors are reduced to one distortion.
enum class DistortionMode { mean, worst_case };

struct CurvePoint {
  std::size_t grid_index = 0;
  std::size_t pruned_count = 0;
  double distortion = 0.0;
  bool valid = true;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Rate-distortion curve of one layer: distortion at every grid index.
struct RDCurve {
  std::size_t layer_index = 0;  // position in ModelGraph::layers
  std::vector<CurvePoint> points;

  friend bool operator==(const RDCurve&, const RDCurve&) = default;
};

/// Dense-model activations for every calibration sample, computed once and
/// shared read-only by all curve workers.
class DenseReference {
 public:
  DenseReference(const ModelGraph& model, const CalibrationSet& calib);

  const ModelGraph& model() const noexcept { return model_; }
  std::size_t sample_count() const noexcept { return traces_.size(); }
  const ActivationTrace& trace(std::size_t s) const { return traces_[s]; }

  /// Aggregated distortion of `pruned`, whose layers before `first_changed`
  /// must equal the reference model's.
  double distortion(const ModelGraph& pruned, std::size_t first_changed,
                    DistortionMode mode) const;

 private:
  ModelGraph model_;
  std::vector<ActivationTrace> traces_;
};

/// Aggregates per-sample errors in sample order. The mean is clamped to the
/// maximum so mean <= worst-case holds exactly.
double aggregate(std::span<const double> per_sample, DistortionMode mode);

/// Distortion of `pruned` against `dense` by full forward passes on every
/// calibration sample.
double measure_distortion(const ModelGraph& dense, const ModelGraph& pruned,
                          const CalibrationSet& calib, DistortionMode mode);

struct CurveOptions {
  DistortionMode mode = DistortionMode::mean;
  bool filter = true;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Incremented once per (layer, grid index, sample) evaluation.
  std::atomic<std::uint64_t>* evaluations = nullptr;
};

/// Curve of prunable layer number `layer` (index into grid layers) with only
/// that layer pruned and every other layer left as in the model. Unfiltered.
RDCurve gen_curve(const DenseReference& reference, const SparsityGrid& grid,
                  std::size_t layer, DistortionMode mode,
                  std::atomic<std::uint64_t>* evaluations = nullptr);

RDCurve gen_curve(const ModelGraph& model, std::size_t layer,
                  const SparsityGrid& grid, const CalibrationSet& calib,
                  DistortionMode mode);

/// Marks point j invalid iff some later point has strictly smaller
/// distortion. Points are kept so grid indexing stays intact.
RDCurve filter_outliers(const RDCurve& curve);

/// One curve per prunable layer, ordered by layer. Layers are processed in
/// parallel; results do not depend on the thread count.
std::vector<RDCurve> gen_all_curves(const ModelGraph& model, const SparsityGrid& grid,
                                    const CalibrationSet& calib,
                                    const CurveOptions& options = {});

/// Throws ArgumentError unless curves match the grid point for point.
void check_curves(const std::vector<RDCurve>& curves, const SparsityGrid& grid);

/// Grid implied by a curve set (S from the point count, n_i and base_i from
/// the last and first pruned counts).
SparsityGrid grid_from_curves(const std::vector<RDCurve>& curves);

}  // namespace rdprune
