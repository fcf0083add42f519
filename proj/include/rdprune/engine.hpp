#pragma once

#include <cstddef>
#include <vector>

#include "rdprune/model.hpp"
#include "rdprune/tensor.hpp"

namespace rdprune {

/// Outputs of every layer for one input, `outputs[i]` being the output of
/// layer i. Used to restart evaluation part-way through a model whose
/// earlier layers are unchanged.
struct ActivationTrace {
  Tensor input;
  std::vector<Tensor> outputs;

  const Tensor& final_output() const {
    return outputs.empty() ? input : outputs.back();
  }
};

/// Runs the model on a single input (no batch dimension). Deterministic:
/// identical weights and input give bit-identical output.
Tensor forward(const ModelGraph& model, const Tensor& input);

/// As forward(), keeping every intermediate output.
ActivationTrace forward_trace(const ModelGraph& model, const Tensor& input);

/// Re-evaluates layers [start, end) of `model` reusing `trace` for everything
/// before `start`. `trace` must come from a model whose layers before `start`
/// are identical to `model`'s; the result equals forward(model, trace.input)
/// bit for bit.
Tensor forward_from(const ModelGraph& model, const ActivationTrace& trace,
                    std::size_t start);

/// ||forward(a, x) - forward(b, x)||^2. Throws ShapeError when the models are
/// not structurally identical.
double output_sq_error(const ModelGraph& model_a, const ModelGraph& model_b,
                       const Tensor& input);

}  // namespace rdprune
