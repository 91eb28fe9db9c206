// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "descatter/autodiff.hpp"

namespace descatter {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError unless every field is positive and both betas < 1.
  void validate() const;
};

/// Moment estimates for one parameter.
template <typename T>
struct AdamState {
  Tensor<T> m;
  Tensor<T> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of `param` from `param.grad`.
template <typename T>
void adam_step(Parameter<T>& param, AdamState<T>& state, const AdamHyper& hyper);

/// Adam over a fixed, ordered parameter list.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamHyper hyper) : hyper_(hyper) { hyper_.validate(); }

  void step(std::span<Parameter<T>> params);

  const AdamHyper& hyper() const noexcept { return hyper_; }
  const std::vector<AdamState<T>>& states() const noexcept { return states_; }
  std::uint64_t steps() const noexcept { return states_.empty() ? 0 : states_.front().t; }

 private:
  AdamHyper hyper_;
  std::vector<AdamState<T>> states_;
};

}  // namespace descatter
