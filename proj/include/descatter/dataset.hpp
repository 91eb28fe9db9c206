// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "descatter/image.hpp"
#include "descatter/kv.hpp"
#include "descatter/optics.hpp"

namespace descatter {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr char kPairMagic[] = "DSPAIR01";

/// One "speckle-object" training pair.
struct SamplePair {
  Image object;   // reference arm (free channel)
  Image speckle;  // diffuser or mmf output
  ChannelKind channel = ChannelKind::diffuser;
  std::string source_id;
};

/// Everything needed to regenerate a dataset byte for byte.
struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  int n = 64;
  int count = 0;
  ChannelConfig channel_config;
  std::uint64_t master_seed = 0;
  std::string source = "glyphs";     // "glyphs" or "idx:<path>"
  std::string symbols = "digits";    // glyph alphabet: "digits" or "letters"
  double rotation_step_deg = 0.0;    // sample j uses rotation_deg + j * step
  int shift_px = 0;                  // max placement offset per axis
  std::vector<std::string> source_ids;
  std::vector<std::uint64_t> checksums;  // FNV-1a of each pair file

  ChannelKind channel() const noexcept { return channel_config.kind; }

  /// Metrics label: "letters" for letter glyphs, "rotated" for rotated
  /// diffusers, otherwise the channel name.
  std::string label() const;

  std::string to_text() const;
  static DatasetManifest parse(const std::string& text);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SamplePair> pairs;
};

/// Pair blob: magic, n (u32 LE), object pixels, speckle pixels (f32 LE).
std::vector<char> encode_pair(const SamplePair& pair);
SamplePair decode_pair(std::span<const char> bytes);
SamplePair read_pair_file(const std::string& path);

std::string pair_file_name(int index);

/// Writes `manifest` plus one blob per pair into `dir`. The directory is
/// assembled under a temporary name and renamed into place.
void write_dataset(const Dataset& dataset, const std::string& dir);

/// Reads and verifies a dataset directory (version, checksums, shapes).
Dataset read_dataset(const std::string& dir);

/// Source image (before the reference channel) for sample `index`.
Image source_image(const DatasetManifest& manifest, int index, std::string* source_id);

/// Deterministically generates every pair described by `manifest` and
/// fills in its source ids and checksums.
Dataset generate_dataset(DatasetManifest manifest);

/// Default dataset root from DESCATTER_DATA, or "." when unset.
std::string default_data_root();

}  // namespace descatter
