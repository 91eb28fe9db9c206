// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "descatter/image.hpp"

namespace descatter {

/// Mean squared pixel difference; N is the pixel count of one image.
double mse(std::span<const float> a, std::span<const float> b);
double mse(const Image& a, const Image& b);

/// Pearson correlation over pixels. When either input is constant the
/// coefficient is undefined; `value` is then 0 and `degenerate` is set.
struct CorrResult {
  double value = 0.0;
  bool degenerate = false;
};

CorrResult corr_checked(std::span<const float> a, std::span<const float> b);
CorrResult corr_checked(const Image& a, const Image& b);
double corr(const Image& a, const Image& b);

/// Pixel-mean binary cross entropy with the same clamp as the training loss.
double bce(std::span<const float> pred, std::span<const float> target);

}  // namespace descatter
