// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "descatter/adam.hpp"
#include "descatter/dataset.hpp"
#include "descatter/kv.hpp"
#include "descatter/unet.hpp"

namespace descatter {

struct TrainConfig {
  int epochs = 1;
  int batch_size = 4;
  AdamHyper adam;
  std::uint64_t seed = 0;
  int checkpoint_every = 1;
  // Training is single-threaded, so runs are always reproducible; the flag
  // is recorded for the CLI contract.
  bool deterministic = false;

  /// Throws ConfigError for non-positive rates or counts. `epochs` may be 0
  /// only when `allow_zero_epochs` is set (library use; the CLI rejects it).
  void validate(bool allow_zero_epochs = false) const;

  /// Reads `epochs`, `batch_size`, `lr`, `beta1`, `beta2`, `epsilon`,
  /// `seed`, `checkpoint_every`, `deterministic`; absent keys keep defaults.
  static TrainConfig from(const KeyValues& kv);
};

/// One CSV row: per-channel means over a split at the end of an epoch.
struct MetricsRecord {
  int epoch = 0;
  std::string split;    // "train" or "test"
  std::string channel;  // "diffuser", "mmf", "letters", "rotated"
  double mse = 0.0;
  double corr = 0.0;
  double loss = 0.0;
};

/// A labelled evaluation set.
struct TestSet {
  std::string label;
  std::vector<SamplePair> pairs;
};

/// Anything that maps a batch of speckles to reconstructions.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<Image> predict(std::span<const Image> speckles) const = 0;
};

/// Runs a U-net in inference mode, `batch` images at a time.
class ModelPredictor : public Predictor {
 public:
  explicit ModelPredictor(const UNetModel<float>& model, int batch = 8) : model_(model), batch_(batch) {}
  std::vector<Image> predict(std::span<const Image> speckles) const override;

 private:
  const UNetModel<float>& model_;
  int batch_;
};

struct SampleMetrics {
  std::string source_id;
  double mse = 0.0;
  double corr = 0.0;
  bool corr_degenerate = false;
  double loss = 0.0;  // BCE of the reconstruction against the object
};

struct Evaluation {
  std::vector<SampleMetrics> samples;
  std::vector<Image> reconstructions;
  double mean_mse = 0.0;
  double mean_corr = 0.0;
  double mean_loss = 0.0;
  int degenerate = 0;  // samples whose corr fell back to the sentinel
};

/// Reconstructs every speckle and scores it against its object.
Evaluation evaluate(const Predictor& predictor, std::span<const SamplePair> pairs);
Evaluation evaluate(const UNetModel<float>& model, std::span<const SamplePair> pairs);

/// Concatenation of `a` and `b` followed by a seeded uniform shuffle.
std::vector<SamplePair> blend_datasets(std::span<const SamplePair> a, std::span<const SamplePair> b,
                                       std::uint64_t seed);

/// Stacks images into a [B,1,n,n] tensor.
Tensor<float> stack_images(std::span<const Image* const> images);

struct TrainOptions {
  std::string checkpoint_dir;  // empty: no checkpoints are written
  std::function<void(int epoch, std::span<const MetricsRecord>)> on_epoch;
};

struct TrainResult {
  std::vector<MetricsRecord> history;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<std::string> checkpoints;
  std::uint64_t steps = 0;
};

/// Mini-batch Adam on BCE. Batches are drawn from a per-epoch shuffle
/// seeded by `cfg.seed`; the last batch of an epoch may be short. After
/// every epoch the per-channel training metrics (from the batch forwards)
/// and every test set are recorded. Throws NumericError on a non-finite
/// loss.
TrainResult train(UNetModel<float>& model, std::span<const SamplePair> data, std::span<const TestSet> tests,
                  const TrainConfig& cfg, const TrainOptions& options = {});

/// Path of the checkpoint written after `epoch`.
std::string checkpoint_path(const std::string& dir, int epoch);

}  // namespace descatter
