// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "descatter/image.hpp"

namespace descatter {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Unsigned-byte IDX tensor (MNIST / EMNIST distribution format).
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxArray parse_idx(std::span<const char> bytes);
IdxArray read_idx_file(const std::string& path);
std::vector<char> encode_idx(const IdxArray& array);

struct IdxSamples {
  std::vector<Image> images;         // pixel bytes scaled by 1/255
  std::vector<std::uint8_t> labels;  // empty when no label file was given
};

/// Reads a 3-D image file and, optionally, its 1-D label file.
IdxSamples read_idx(const std::string& images_path, const std::string& labels_path = "");

}  // namespace descatter
