// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace descatter {

Image::Image(int n, float fill) : n_(n) {
  if (n < 1) throw ShapeError("image side must be positive, got " + std::to_string(n));
  pixels_.assign(static_cast<std::size_t>(n) * n, fill);
}

Image::Image(int n, std::vector<float> pixels) : n_(n), pixels_(std::move(pixels)) {
  if (n < 1 || pixels_.size() != static_cast<std::size_t>(n) * n) {
    throw ShapeError("image of side " + std::to_string(n) + " cannot hold " +
                     std::to_string(pixels_.size()) + " pixels");
  }
}

Image resize_bilinear(const Image& img, int target_n) {
  const int n = img.n();
  if (target_n < n) {
    throw ConfigError("resize_bilinear: target " + std::to_string(target_n) +
                      " is smaller than source " + std::to_string(n));
  }
  if (target_n == n) return img;
  Image out(target_n);
  const double scale = n > 1 ? static_cast<double>(n - 1) / (target_n - 1) : 0.0;
  for (int r = 0; r < target_n; ++r) {
    const double y = r * scale;
    const int y0 = std::min(static_cast<int>(std::floor(y)), std::max(n - 2, 0));
    const int y1 = std::min(y0 + 1, n - 1);
    const double ty = y - y0;
    for (int c = 0; c < target_n; ++c) {
      const double x = c * scale;
      const int x0 = std::min(static_cast<int>(std::floor(x)), std::max(n - 2, 0));
      const int x1 = std::min(x0 + 1, n - 1);
      const double tx = x - x0;
      const double top = img.at(y0, x0) * (1.0 - tx) + img.at(y0, x1) * tx;
      const double bottom = img.at(y1, x0) * (1.0 - tx) + img.at(y1, x1) * tx;
      out.at(r, c) = static_cast<float>(top * (1.0 - ty) + bottom * ty);
    }
  }
  return out;
}

Image normalize(const Image& img) {
  const auto px = img.pixels();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const float lo = *lo_it, hi = *hi_it;
  Image out(img.n());
  if (!(hi > lo)) return out;
  const double span = static_cast<double>(hi) - lo;
  auto dst = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    dst[i] = static_cast<float>((static_cast<double>(px[i]) - lo) / span);
  }
  return out;
}

Image normalize(int n, std::span<const double> values) {
  Image out(n);
  if (values.size() != out.size()) {
    throw ShapeError("normalize: " + std::to_string(values.size()) + " values for side " +
                     std::to_string(n));
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  auto dst = out.pixels();
  for (std::size_t i = 0; i < values.size(); ++i) {
    dst[i] = static_cast<float>((values[i] - lo) / (hi - lo));
  }
  return out;
}

}  // namespace descatter
