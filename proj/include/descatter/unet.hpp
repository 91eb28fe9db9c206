// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "descatter/autodiff.hpp"

namespace descatter {

struct UNetConfig {
  int n = 64;             // input side, power of two
  int depth = 5;          // pooling levels
  int base_filters = 16;  // channels of the first block; doubled per level
  int kernel = 3;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Channel count at level `i` (level `depth` is the bottleneck).
  int channels(int level) const { return base_filters << level; }

  /// key = value lines, stable field order.
  std::string to_text() const;
  static UNetConfig from_text(const std::string& text);
  std::map<std::string, std::string> fields() const;

  bool operator==(const UNetConfig&) const = default;
};

/// Contracting path of `depth` blocks (conv-relu-conv-relu, then maxpool), a
/// two-conv bottleneck, an expanding path of `depth` blocks (upsample, conv
/// halving channels, concat with the matching pre-pool activation,
/// conv-relu-conv-relu) and a 1x1 conv + sigmoid head.
template <typename T>
class UNetModel {
 public:
  /// He-uniform kernels (bound sqrt(6 / fan_in)), zero biases, drawn in
  /// parameter order from a stream seeded by `seed`.
  UNetModel(UNetConfig config, std::uint64_t seed);

  /// Model with every value zero; used by checkpoint loading.
  static UNetModel zeroed(UNetConfig config);

  const UNetConfig& config() const noexcept { return config_; }
  std::vector<Parameter<T>>& params() noexcept { return params_; }
  const std::vector<Parameter<T>>& params() const noexcept { return params_; }
  std::span<Parameter<T>> param_span() noexcept { return params_; }

  /// Total number of scalar parameters.
  std::size_t parameter_count() const;

  Parameter<T>* find(const std::string& name);

  /// Records the forward pass on `graph`, binding parameters as trainable
  /// leaves. `input` must be [B,1,n,n].
  Var<T> forward(Graph<T>& graph, Var<T> input);

  /// forward() without the output sigmoid, for use with bce_with_logits.
  Var<T> forward_logits(Graph<T>& graph, Var<T> input);

  /// Inference-only forward pass; does not touch gradients.
  Tensor<T> predict(const Tensor<T>& batch) const;

  /// Channel counts of each skip pair (encoder level i, decoder level i),
  /// captured during the most recent forward. For wiring checks.
  struct SkipRecord {
    int level;
    int encoder_channels;
    int decoder_channels;
  };
  const std::vector<SkipRecord>& last_skips() const noexcept { return skips_; }

 private:
  explicit UNetModel(UNetConfig config);
  void declare_params();
  void check_input(const Shape& shape) const;

  template <typename Leaf>
  Var<T> run(Graph<T>& graph, Var<T> input, Leaf&& leaf, std::vector<SkipRecord>* skips) const;

  UNetConfig config_;
  std::vector<Parameter<T>> params_;
  std::vector<SkipRecord> skips_;
};

/// Convenience wrapper matching the builder signature used by callers.
template <typename T>
UNetModel<T> build_unet(const UNetConfig& config, std::uint64_t seed) {
  return UNetModel<T>(config, seed);
}

}  // namespace descatter
