// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "descatter/unet.hpp"

namespace descatter {

inline constexpr char kCheckpointMagic[] = "DSCKPT01";

/// Layout: magic, u32 config length, config text, then for every parameter
/// u32 name length, name, u32 rank, rank x u32 dims, f32 values. All
/// integers and floats little-endian.
std::vector<char> encode_checkpoint(const UNetModel<float>& model);

/// Parses a checkpoint. When `expected` is given, its fields are compared
/// with the stored config first and any difference raises
/// ArchitectureMismatch.
UNetModel<float> decode_checkpoint(std::span<const char> bytes,
                                   const std::optional<UNetConfig>& expected = std::nullopt);

void save_checkpoint(const UNetModel<float>& model, const std::string& path);
UNetModel<float> load_checkpoint(const std::string& path,
                                 const std::optional<UNetConfig>& expected = std::nullopt);

}  // namespace descatter
