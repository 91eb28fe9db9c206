// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "descatter/tensor.hpp"

namespace descatter {

/// A trainable tensor with its gradient slot. `grad` is overwritten (not
/// accumulated) by every Graph::backward call.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<T>::zeros_like(value)) {}
};

template <typename T>
class Graph;

/// Handle to a node recorded on a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  int id = -1;

  bool valid() const noexcept { return graph != nullptr && id >= 0; }
  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Tape of forward operations. Nodes are appended in execution order, so
/// reverse order is a valid topological order for the backward sweep.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated lazily during backward
    BackwardFn backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Records a constant leaf (no gradient flows into it).
  Var<T> constant(Tensor<T> value);

  /// Records a leaf bound to `param`. After backward, `param.grad` holds the
  /// gradient of the loss with respect to `param.value`.
  Var<T> parameter(Parameter<T>& param);

  /// Records an op result. `backward` is only kept when some input requires
  /// a gradient.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn backward);

  const Tensor<T>& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }

  /// Gradient buffer of node `id`, zero-initialized on first access.
  Tensor<T>& grad(int id);

  /// Reverse sweep from the scalar `loss`. Overwrites the grad of every
  /// Parameter recorded on this graph; parameters the loss does not depend
  /// on receive zeros.
  void backward(Var<T> loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!valid()) throw StateError("use of an unrecorded variable");
  return graph->value(id);
}

/// Same-padding is padding = (k - 1) / 2. Cross-correlation, stride 1.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, int padding);

/// 2x2 non-overlapping max; ties resolve to the first element in row-major
/// window order.
template <typename T>
Var<T> maxpool2d(Var<T> input);

template <typename T>
Var<T> upsample_nearest2x(Var<T> input);

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b);

template <typename T>
Var<T> relu(Var<T> x);

template <typename T>
Var<T> sigmoid(Var<T> x);

template <typename T>
Var<T> sum(Var<T> x);

inline constexpr double kBceClamp = 1e-7;

/// Mean binary cross entropy over every element of `pred`. Predictions are
/// clamped to [kBceClamp, 1 - kBceClamp] before the logarithm; the clamp
/// has zero derivative outside that interval.
template <typename T>
Var<T> bce_loss(Var<T> pred, const Tensor<T>& target);

/// bce_loss(sigmoid(logits), target) fused into one op. The value is
/// identical; the gradient is (sigmoid(z) - y) / size everywhere, so
/// saturated outputs are not cut off by the clamp.
template <typename T>
Var<T> bce_with_logits(Var<T> logits, const Tensor<T>& target);

namespace kernels {

// Raw forward/backward routines behind the graph ops. Exposed for tests and
// for callers that only need inference.

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                         int padding);

/// Any of the output pointers may be null to skip that gradient.
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int padding,
                     const Tensor<T>& grad_out, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                     Tensor<T>* grad_bias);

/// Returns the pooled tensor; `argmax` receives the flat input index chosen
/// for each output element.
template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& input, std::vector<std::size_t>* argmax);

template <typename T>
Tensor<T> upsample_nearest2x_forward(const Tensor<T>& input);

template <typename T>
double bce_value(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace kernels

}  // namespace descatter
