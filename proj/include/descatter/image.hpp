// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "descatter/error.hpp"

namespace descatter {

/// Square grayscale image, row-major, 32-bit pixels.
class Image {
 public:
  Image() = default;
  explicit Image(int n, float fill = 0.0f);
  Image(int n, std::vector<float> pixels);

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  float& at(int row, int col) noexcept { return pixels_[static_cast<std::size_t>(row) * n_ + col]; }
  float at(int row, int col) const noexcept { return pixels_[static_cast<std::size_t>(row) * n_ + col]; }

  std::span<float> pixels() noexcept { return pixels_; }
  std::span<const float> pixels() const noexcept { return pixels_; }
  std::vector<float>& storage() noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int n_ = 0;
  std::vector<float> pixels_;
};

/// Bilinear upsampling with the align-corners convention: output pixel i
/// samples source coordinate i * (n - 1) / (target_n - 1), so the four
/// corners are preserved exactly. Downsizing is rejected.
Image resize_bilinear(const Image& img, int target_n);

/// Affine min-max map to [0, 1]. A constant image maps to all zeros.
Image normalize(const Image& img);

/// Same map applied to a double-precision buffer, producing an Image.
Image normalize(int n, std::span<const double> values);

}  // namespace descatter
