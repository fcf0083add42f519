#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdprune/tensor.hpp"

namespace rdprune {

enum class LayerKind { dense, conv2d, relu, maxpool2d, avgpool2d, flatten, add_skip };

std::string_view to_string(LayerKind kind);
/// Throws UnknownLayerKindError for unrecognised names.
LayerKind parse_layer_kind(std::string_view name);

/// One node of a feedforward model.
///
/// dense:   weight [out, in], optional bias [out]; input is a flat vector.
/// conv2d:  weight [out_c, in_c, kh, kw], optional bias [out_c]; input [c, h, w].
/// pools:   `kernel` x `kernel` window moved by `stride`, no padding.
/// add-skip: element-wise sum of the previous output and the output of layer
///          `skip_source` (-1 refers to the model input).
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::optional<Tensor> weight;
  std::optional<Tensor> bias;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t kernel = 0;
  long skip_source = -1;

  bool prunable() const noexcept {
    return kind == LayerKind::dense || kind == LayerKind::conv2d;
  }
};

struct ModelGraph {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  /// Positions in `layers` of dense/conv2d layers, in order.
  std::vector<std::size_t> prunable_layers() const;
  /// Sum of weight element counts over prunable layers (biases excluded).
  std::size_t total_prunable() const;
};

/// Checks structural invariants (weight ranks, parameter-free kinds, skip
/// sources referencing earlier layers) and infers per-layer output shapes.
/// Throws ShapeError naming the first offending layer.
std::vector<Shape> infer_shapes(const ModelGraph& model);

/// True when both models have the same layer kinds, attributes and tensor
/// shapes; weight values may differ.
bool same_structure(const ModelGraph& a, const ModelGraph& b);

}  // namespace rdprune
