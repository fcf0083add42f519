#include "rdprune/rd_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <exception>
#include <thread>

#include "rdprune/error.hpp"
#include "rdprune/pruner.hpp"

namespace rdprune {

DenseReference::DenseReference(const ModelGraph& model, const CalibrationSet& calib)
    : model_(model) {
  validate(calib);
  infer_shapes(model_);
  traces_.reserve(calib.size());
  for (const auto& x : calib.samples) traces_.push_back(forward_trace(model_, x));
}

double aggregate(std::span<const double> per_sample, DistortionMode mode) {
  if (per_sample.empty()) throw ArgumentError("cannot aggregate zero samples");
  double sum = 0.0;
  double worst = 0.0;
  for (double e : per_sample) {
    sum += e;
    worst = std::max(worst, e);
  }
  if (mode == DistortionMode::worst_case) return worst;
  // Rounding in the running sum may lift the mean an ulp above the maximum.
  return std::min(sum / static_cast<double>(per_sample.size()), worst);
}

double DenseReference::distortion(const ModelGraph& pruned, std::size_t first_changed,
                                  DistortionMode mode) const {
  std::vector<double> errors(traces_.size());
  for (std::size_t s = 0; s < traces_.size(); ++s) {
    const Tensor out = forward_from(pruned, traces_[s], first_changed);
    errors[s] = squared_distance(out.data(), traces_[s].final_output().data());
  }
  return aggregate(errors, mode);
}

double measure_distortion(const ModelGraph& dense, const ModelGraph& pruned,
                          const CalibrationSet& calib, DistortionMode mode) {
  validate(calib);
  std::vector<double> errors;
  errors.reserve(calib.size());
  for (const auto& x : calib.samples) errors.push_back(output_sq_error(dense, pruned, x));
  return aggregate(errors, mode);
}

RDCurve gen_curve(const DenseReference& reference, const SparsityGrid& grid,
                  std::size_t layer, DistortionMode mode,
                  std::atomic<std::uint64_t>* evaluations) {
  const ModelGraph& model = reference.model();
  const auto prunable = model.prunable_layers();
  if (grid.layer_count() != prunable.size())
    throw ArgumentError("grid has " + std::to_string(grid.layer_count()) +
                        " layers, model has " + std::to_string(prunable.size()));
  if (layer >= prunable.size())
    throw ArgumentError("prunable layer " + std::to_string(layer) + " out of range");

  const std::size_t li = prunable[layer];
  const auto weights = model.layers[li].weight->data();
  if (grid.layer_size(layer) != weights.size())
    throw ArgumentError("grid size for layer " + std::to_string(li) +
                        " does not match its weight count");
  const auto zeros = static_cast<std::size_t>(
      std::count(weights.begin(), weights.end(), 0.0f));
  if (grid.base(layer) > zeros)
    throw ArgumentError("grid base for layer " + std::to_string(li) +
                        " exceeds the weights already pruned");

  const auto order = magnitude_order(weights);
  ModelGraph work = model;
  auto data = work.layers[li].weight->data();

  RDCurve curve;
  curve.layer_index = li;
  curve.points.reserve(grid.levels() + 1);
  std::size_t pruned = 0;
  for (std::size_t j = 0; j <= grid.levels(); ++j) {
    // Masks only grow along the curve: extend the zero set to c_i(j).
    const std::size_t target = grid.count(layer, j);
    for (; pruned < target; ++pruned) data[order[pruned]] = 0.0f;
    const double d = reference.distortion(work, li, mode);
    if (evaluations) evaluations->fetch_add(reference.sample_count());
    curve.points.push_back({j, target, d, true});
  }
  return curve;
}

RDCurve gen_curve(const ModelGraph& model, std::size_t layer, const SparsityGrid& grid,
                  const CalibrationSet& calib, DistortionMode mode) {
  const DenseReference reference(model, calib);
  return gen_curve(reference, grid, layer, mode);
}

RDCurve filter_outliers(const RDCurve& curve) {
  RDCurve out = curve;
  double suffix_min = std::numeric_limits<double>::infinity();
  for (auto it = out.points.rbegin(); it != out.points.rend(); ++it) {
    it->valid = !(suffix_min < it->distortion);
    suffix_min = std::min(suffix_min, it->distortion);
  }
  return out;
}

std::vector<RDCurve> gen_all_curves(const ModelGraph& model, const SparsityGrid& grid,
                                    const CalibrationSet& calib,
                                    const CurveOptions& options) {
  const DenseReference reference(model, calib);
  const std::size_t layers = model.prunable_layers().size();
  if (grid.layer_count() != layers)
    throw ArgumentError("grid has " + std::to_string(grid.layer_count()) +
                        " layers, model has " + std::to_string(layers));

  std::vector<RDCurve> curves(layers);
  std::vector<std::exception_ptr> failures(layers);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < layers; i = next++) {
      try {
        curves[i] = gen_curve(reference, grid, i, options.mode, options.evaluations);
        if (options.filter) curves[i] = filter_outliers(curves[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(layers, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const auto prunable = model.prunable_layers();
  for (std::size_t i = 0; i < layers; ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      throw Error("curve generation failed for layer " + std::to_string(prunable[i]) + ": " +
                  e.what());
    }
  }
  return curves;
}

void check_curves(const std::vector<RDCurve>& curves, const SparsityGrid& grid) {
  if (curves.size() != grid.layer_count())
    throw ArgumentError(std::to_string(curves.size()) + " curves for a grid of " +
                        std::to_string(grid.layer_count()) + " layers");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& pts = curves[i].points;
    if (pts.size() != grid.levels() + 1)
      throw ArgumentError("curve " + std::to_string(i) + " has " + std::to_string(pts.size()) +
                          " points, grid needs " + std::to_string(grid.levels() + 1));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (pts[j].grid_index != j || pts[j].pruned_count != grid.count(i, j))
        throw ArgumentError("curve " + std::to_string(i) + " point " + std::to_string(j) +
                            " disagrees with the sparsity grid");
      if (!(pts[j].distortion >= 0.0) || !std::isfinite(pts[j].distortion))
        throw ArgumentError("curve " + std::to_string(i) + " point " + std::to_string(j) +
                            " has a negative or non-finite distortion");
    }
    if (!pts[0].valid)
      throw ArgumentError("curve " + std::to_string(i) + " has no valid j=0 point");
  }
}

SparsityGrid grid_from_curves(const std::vector<RDCurve>& curves) {
  if (curves.empty()) throw ArgumentError("empty curve set");
  const std::size_t points = curves.front().points.size();
  if (points < 2) throw ArgumentError("curves need at least two points");
  std::vector<std::size_t> sizes, base;
  for (const auto& c : curves) {
    if (c.points.size() != points) throw ArgumentError("curves differ in point count");
    base.push_back(c.points.front().pruned_count);
    sizes.push_back(c.points.back().pruned_count);
  }
  SparsityGrid grid(points - 1, std::move(sizes), std::move(base));
  check_curves(curves, grid);
  return grid;
}

}  // namespace rdprune
