// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

#include "descatter/image.hpp"

namespace descatter {

struct GlyphSpec {
  char symbol = '0';          // '0'-'9' or 'A'-'Z'
  std::uint64_t style_seed = 0;
};

inline constexpr std::string_view kDigits = "0123456789";
inline constexpr std::string_view kLetters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

bool glyph_supported(char symbol);

/// Handwriting-like rendering of a symbol: a fixed polyline template per
/// symbol, perturbed by the style seed (global slant/scale and per-point
/// offsets of at most 4% of n on each axis), drawn with a stroke width of
/// 5-9% of n and a one-pixel soft edge, then normalized.
Image render_glyph(const GlyphSpec& spec, int n);

}  // namespace descatter
