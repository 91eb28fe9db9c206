// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "descatter/dataset.hpp"
#include "descatter/kv.hpp"
#include "descatter/train.hpp"
#include "descatter/unet.hpp"

namespace descatter {

enum class ExperimentKind { hybrid, cross_control, letters, rotated_diffuser };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// A recipe lacks required keys. The CLI maps this to a usage error.
class MissingKeysError : public ConfigError {
 public:
  explicit MissingKeysError(std::vector<std::string> keys);
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// Parsed experiment recipe. Required keys: `out_dir`, `epochs`. The
/// letters experiment additionally needs `letter_source` (glyphs or
/// idx:PATH). Every other key has a default, see README.
struct ExperimentRecipe {
  std::string out_dir;
  int n = 64;
  int train_count = 256;  // per channel
  int test_count = 10;    // per channel
  std::uint64_t data_seed = 1;  // mmf training objects use data_seed + 1
  std::uint64_t test_seed = 1001;
  int shift_px = 0;
  ChannelConfig diffuser;
  ChannelConfig mmf;
  std::string letter_source;
  double rotation_step_deg = 13.0;
  UNetConfig model;
  TrainConfig train;
  int control_epochs = 0;  // 0: same as train.epochs

  static ExperimentRecipe from(const KeyValues& kv, ExperimentKind kind);

  DatasetManifest train_manifest(ChannelKind channel) const;
  DatasetManifest test_manifest(ChannelKind channel) const;
  DatasetManifest letters_manifest() const;
  DatasetManifest rotated_manifest() const;
};

/// Generates the dataset described by `manifest` into `dir` unless an
/// identical dataset is already there, then returns it.
Dataset ensure_dataset(const DatasetManifest& manifest, const std::string& dir, std::ostream* log = nullptr);

/// Runs one experiment and writes `<out_dir>/<kind>/report.txt` plus CSVs
/// and plots next to it. Returns the report. The letters and rotated
/// experiments reuse the hybrid model and fail with ConfigError naming the
/// hybrid step when it has not been run.
KeyValues run_experiment(ExperimentKind kind, const KeyValues& recipe, std::ostream* log = nullptr);

}  // namespace descatter
