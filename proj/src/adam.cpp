// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/adam.hpp"

#include <cmath>
#include <string>

namespace descatter {

void AdamHyper::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("adam: ") + name + " must be positive, got " +
                        std::to_string(v));
    }
  };
  positive(lr, "lr");
  positive(beta1, "beta1");
  positive(beta2, "beta2");
  positive(epsilon, "epsilon");
  if (beta1 >= 1.0 || beta2 >= 1.0) throw ConfigError("adam: betas must be < 1");
}

template <typename T>
void adam_step(Parameter<T>& param, AdamState<T>& state, const AdamHyper& hyper) {
  if (param.grad.shape() != param.value.shape()) {
    throw ShapeError("adam: gradient of '" + param.name + "' has shape " +
                     shape_to_string(param.grad.shape()) + ", value has " +
                     shape_to_string(param.value.shape()));
  }
  if (state.m.shape() != param.value.shape()) {
    state.m = Tensor<T>::zeros_like(param.value);
    state.v = Tensor<T>::zeros_like(param.value);
    state.t = 0;
  }
  state.t += 1;
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  T* w = param.value.data();
  T* m = state.m.data();
  T* v = state.v.data();
  const T* g = param.grad.data();
  for (std::size_t i = 0; i < param.value.numel(); ++i) {
    const double gi = g[i];
    const double mi = b1 * m[i] + (1.0 - b1) * gi;
    const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    w[i] = static_cast<T>(w[i] - hyper.lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.epsilon));
  }
}

template <typename T>
void Adam<T>::step(std::span<Parameter<T>> params) {
  if (states_.size() != params.size()) states_.assign(params.size(), AdamState<T>{});
  for (std::size_t i = 0; i < params.size(); ++i) adam_step(params[i], states_[i], hyper_);
}

template void adam_step<float>(Parameter<float>&, AdamState<float>&, const AdamHyper&);
template void adam_step<double>(Parameter<double>&, AdamState<double>&, const AdamHyper&);
template class Adam<float>;
template class Adam<double>;

}  // namespace descatter
