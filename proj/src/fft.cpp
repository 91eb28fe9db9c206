// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "descatter/error.hpp"

namespace descatter {

void fft(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ShapeError("fft: length must be a power of two, got " + std::to_string(n));
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> twiddle;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    twiddle.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      twiddle[k] = Complex(std::cos(a), std::sin(a));
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[i + k];
        const Complex v = data[i + k + half] * twiddle[k];
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : data) v *= scale;
  }
}

void fft2(std::span<Complex> data, int n, bool inverse) {
  const std::size_t side = static_cast<std::size_t>(n);
  if (data.size() != side * side) {
    throw ShapeError("fft2: buffer of " + std::to_string(data.size()) + " for side " + std::to_string(n));
  }
  for (std::size_t r = 0; r < side; ++r) fft(data.subspan(r * side, side), inverse);
  std::vector<Complex> column(side);
  for (std::size_t c = 0; c < side; ++c) {
    for (std::size_t r = 0; r < side; ++r) column[r] = data[r * side + c];
    fft(column, inverse);
    for (std::size_t r = 0; r < side; ++r) data[r * side + c] = column[r];
  }
}

}  // namespace descatter
