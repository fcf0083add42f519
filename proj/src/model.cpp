#include "rdprune/model.hpp"

#include <array>
#include <utility>

#include "rdprune/error.hpp"

namespace rdprune {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 7> kKindNames{{
    {LayerKind::dense, "dense"},
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::avgpool2d, "avgpool2d"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::add_skip, "add-skip"},
}};

Shape pooled_shape(long index, const LayerSpec& layer, const Shape& in) {
  if (in.size() != 3) throw ShapeError(index, "pooling expects [c,h,w], got " + shape_str(in));
  if (layer.kernel == 0 || layer.stride == 0)
    throw ShapeError(index, "pooling needs kernel and stride >= 1");
  if (in[1] < layer.kernel || in[2] < layer.kernel)
    throw ShapeError(index, "pooling window larger than input " + shape_str(in));
  return {in[0], (in[1] - layer.kernel) / layer.stride + 1,
          (in[2] - layer.kernel) / layer.stride + 1};
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw UnknownLayerKindError("unknown layer kind '" + std::string(name) + "'");
}

std::vector<std::size_t> ModelGraph::prunable_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].prunable()) out.push_back(i);
  return out;
}

std::size_t ModelGraph::total_prunable() const {
  std::size_t n = 0;
  for (const auto& layer : layers)
    if (layer.prunable() && layer.weight) n += layer.weight->size();
  return n;
}

std::vector<Shape> infer_shapes(const ModelGraph& model) {
  std::vector<Shape> shapes;
  shapes.reserve(model.layers.size());
  if (model.input_shape.empty() || shape_numel(model.input_shape) == 0)
    throw ShapeError(-1, "model input shape must be non-empty with positive dims");

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const auto& layer = model.layers[li];
    const long idx = static_cast<long>(li);
    const Shape& in = li == 0 ? model.input_shape : shapes.back();

    if (!layer.prunable() && (layer.weight || layer.bias))
      throw ShapeError(idx, std::string(to_string(layer.kind)) + " carries no parameters");

    switch (layer.kind) {
      case LayerKind::dense: {
        if (!layer.weight || layer.weight->rank() != 2)
          throw ShapeError(idx, "dense weight must be 2-D");
        const auto& w = layer.weight->shape();
        if (in.size() != 1 || in[0] != w[1])
          throw ShapeError(idx, "dense weight " + shape_str(w) + " does not accept input " +
                                    shape_str(in));
        if (layer.bias && layer.bias->shape() != Shape{w[0]})
          throw ShapeError(idx, "dense bias must be [" + std::to_string(w[0]) + "]");
        shapes.push_back({w[0]});
        break;
      }
      case LayerKind::conv2d: {
        if (!layer.weight || layer.weight->rank() != 4)
          throw ShapeError(idx, "conv2d weight must be 4-D");
        const auto& w = layer.weight->shape();
        if (in.size() != 3 || in[0] != w[1])
          throw ShapeError(idx, "conv2d weight " + shape_str(w) + " does not accept input " +
                                    shape_str(in));
        if (layer.stride == 0) throw ShapeError(idx, "conv2d stride must be >= 1");
        const std::size_t ph = in[1] + 2 * layer.padding;
        const std::size_t pw = in[2] + 2 * layer.padding;
        if (ph < w[2] || pw < w[3]) throw ShapeError(idx, "conv2d kernel larger than padded input");
        if (layer.bias && layer.bias->shape() != Shape{w[0]})
          throw ShapeError(idx, "conv2d bias must be [" + std::to_string(w[0]) + "]");
        shapes.push_back({w[0], (ph - w[2]) / layer.stride + 1, (pw - w[3]) / layer.stride + 1});
        break;
      }
      case LayerKind::relu:
        shapes.push_back(in);
        break;
      case LayerKind::maxpool2d:
      case LayerKind::avgpool2d:
        shapes.push_back(pooled_shape(idx, layer, in));
        break;
      case LayerKind::flatten:
        shapes.push_back({shape_numel(in)});
        break;
      case LayerKind::add_skip: {
        if (layer.skip_source < -1 || layer.skip_source >= idx)
          throw ShapeError(idx, "add-skip source " + std::to_string(layer.skip_source) +
                                    " must reference an earlier layer or the input (-1)");
        const Shape& src = layer.skip_source < 0
                               ? model.input_shape
                               : shapes[static_cast<std::size_t>(layer.skip_source)];
        if (src != in)
          throw ShapeError(idx, "add-skip operands " + shape_str(in) + " and " +
                                    shape_str(src) + " differ");
        shapes.push_back(in);
        break;
      }
    }
  }
  return shapes;
}

bool same_structure(const ModelGraph& a, const ModelGraph& b) {
  if (a.input_shape != b.input_shape || a.layers.size() != b.layers.size()) return false;
  auto shape_of = [](const std::optional<Tensor>& t) {
    return t ? std::optional<Shape>(t->shape()) : std::nullopt;
  };
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.kind != y.kind || x.stride != y.stride || x.padding != y.padding ||
        x.kernel != y.kernel || x.skip_source != y.skip_source ||
        shape_of(x.weight) != shape_of(y.weight) || shape_of(x.bias) != shape_of(y.bias))
      return false;
  }
  return true;
}

}  // namespace rdprune
