#include "rdprune/engine.hpp"

#include <algorithm>
#include <limits>

#include "rdprune/error.hpp"

namespace rdprune {

namespace {

Tensor dense(long idx, const LayerSpec& layer, const Tensor& in) {
  const auto& w = *layer.weight;
  const std::size_t out_n = w.shape()[0];
  const std::size_t in_n = w.shape()[1];
  if (in.rank() != 1 || in.size() != in_n)
    throw ShapeError(idx, "dense expects [" + std::to_string(in_n) + "], got " +
                              shape_str(in.shape()));
  Tensor out({out_n});
  const auto x = in.data();
  const auto wd = w.data();
  for (std::size_t o = 0; o < out_n; ++o) {
    double acc = layer.bias ? static_cast<double>((*layer.bias)[o]) : 0.0;
    const float* row = wd.data() + o * in_n;
    for (std::size_t i = 0; i < in_n; ++i)
      acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
    out[o] = static_cast<float>(acc);
  }
  return out;
}

Tensor conv2d(long idx, const LayerSpec& layer, const Tensor& in) {
  const auto& w = *layer.weight;
  const auto& ws = w.shape();
  const std::size_t oc_n = ws[0], ic_n = ws[1], kh = ws[2], kw = ws[3];
  if (in.rank() != 3 || in.shape()[0] != ic_n)
    throw ShapeError(idx, "conv2d expects " + std::to_string(ic_n) + " input channels, got " +
                              shape_str(in.shape()));
  const std::size_t h = in.shape()[1], wd = in.shape()[2];
  const std::size_t pad = layer.padding, stride = layer.stride;
  if (h + 2 * pad < kh || wd + 2 * pad < kw)
    throw ShapeError(idx, "conv2d kernel larger than padded input");
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (wd + 2 * pad - kw) / stride + 1;

  Tensor out({oc_n, oh, ow});
  const auto x = in.data();
  const auto k = w.data();
  for (std::size_t oc = 0; oc < oc_n; ++oc) {
    const double b = layer.bias ? static_cast<double>((*layer.bias)[oc]) : 0.0;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = b;
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
          const float* kern = k.data() + ((oc * ic_n + ic) * kh) * kw;
          const float* plane = x.data() + ic * h * wd;
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (ix < 0 || ix >= static_cast<long>(wd)) continue;
              acc += static_cast<double>(kern[ky * kw + kx]) *
                     static_cast<double>(plane[static_cast<std::size_t>(iy) * wd +
                                               static_cast<std::size_t>(ix)]);
            }
          }
        }
        out[(oc * oh + oy) * ow + ox] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor pool(long idx, const LayerSpec& layer, const Tensor& in, bool max) {
  if (in.rank() != 3) throw ShapeError(idx, "pooling expects [c,h,w], got " + shape_str(in.shape()));
  const std::size_t c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  const std::size_t k = layer.kernel, s = layer.stride;
  if (k == 0 || s == 0 || h < k || w < k) throw ShapeError(idx, "invalid pooling window");
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  Tensor out({c, oh, ow});
  const auto x = in.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = max ? -std::numeric_limits<double>::infinity() : 0.0;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double v = x[(ch * h + oy * s + ky) * w + ox * s + kx];
            acc = max ? std::max(acc, v) : acc + v;
          }
        }
        if (!max) acc /= static_cast<double>(k * k);
        out[(ch * oh + oy) * ow + ox] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor add(long idx, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(idx, "add-skip operands " + shape_str(a.shape()) + " and " +
                              shape_str(b.shape()) + " differ");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor eval_layer(std::size_t index, const LayerSpec& layer, const Tensor& in,
                  const ActivationTrace& trace) {
  const long idx = static_cast<long>(index);
  switch (layer.kind) {
    case LayerKind::dense:
      if (!layer.weight || layer.weight->rank() != 2) throw ShapeError(idx, "dense weight must be 2-D");
      return dense(idx, layer, in);
    case LayerKind::conv2d:
      if (!layer.weight || layer.weight->rank() != 4) throw ShapeError(idx, "conv2d weight must be 4-D");
      return conv2d(idx, layer, in);
    case LayerKind::relu: {
      Tensor out = in;
      for (auto& v : out.data()) v = v > 0.0f ? v : 0.0f;
      return out;
    }
    case LayerKind::maxpool2d:
      return pool(idx, layer, in, true);
    case LayerKind::avgpool2d:
      return pool(idx, layer, in, false);
    case LayerKind::flatten:
      return in.reshaped({in.size()});
    case LayerKind::add_skip: {
      if (layer.skip_source < -1 || layer.skip_source >= idx)
        throw ShapeError(idx, "add-skip source must reference an earlier layer");
      const Tensor& src = layer.skip_source < 0
                              ? trace.input
                              : trace.outputs[static_cast<std::size_t>(layer.skip_source)];
      return add(idx, in, src);
    }
  }
  throw ShapeError(idx, "unhandled layer kind");
}

void check_input(const ModelGraph& model, const Tensor& input) {
  if (input.shape() != model.input_shape)
    throw ShapeError(-1, "expected " + shape_str(model.input_shape) + ", got " +
                             shape_str(input.shape()));
}

}  // namespace

ActivationTrace forward_trace(const ModelGraph& model, const Tensor& input) {
  check_input(model, input);
  ActivationTrace trace;
  trace.input = input;
  trace.outputs.reserve(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Tensor& in = i == 0 ? trace.input : trace.outputs[i - 1];
    trace.outputs.push_back(eval_layer(i, model.layers[i], in, trace));
  }
  return trace;
}

Tensor forward(const ModelGraph& model, const Tensor& input) {
  if (model.layers.empty()) {
    check_input(model, input);
    return input;
  }
  return forward_trace(model, input).final_output();
}

Tensor forward_from(const ModelGraph& model, const ActivationTrace& trace, std::size_t start) {
  check_input(model, trace.input);
  if (trace.outputs.size() != model.layers.size())
    throw ArgumentError("activation trace does not match the model's layer count");
  if (start >= model.layers.size()) return trace.final_output();

  // Outputs before `start` come from `trace`; later ones are recomputed.
  ActivationTrace scratch;
  scratch.outputs.resize(model.layers.size());
  auto output_at = [&](long i) -> const Tensor& {
    if (i < 0) return trace.input;
    const auto u = static_cast<std::size_t>(i);
    return u < start ? trace.outputs[u] : scratch.outputs[u];
  };
  for (std::size_t i = start; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    const Tensor& in = i == 0 ? trace.input : output_at(static_cast<long>(i) - 1);
    if (layer.kind == LayerKind::add_skip) {
      const long idx = static_cast<long>(i);
      if (layer.skip_source < -1 || layer.skip_source >= idx)
        throw ShapeError(idx, "add-skip source must reference an earlier layer");
      scratch.outputs[i] = add(idx, in, output_at(layer.skip_source));
    } else {
      scratch.outputs[i] = eval_layer(i, layer, in, trace);
    }
  }
  return std::move(scratch.outputs.back());
}

double output_sq_error(const ModelGraph& model_a, const ModelGraph& model_b,
                       const Tensor& input) {
  if (!same_structure(model_a, model_b))
    throw ShapeError(-1, "models differ in structure");
  const Tensor a = forward(model_a, input);
  const Tensor b = forward(model_b, input);
  return squared_distance(a.data(), b.data());
}

}  // namespace rdprune
