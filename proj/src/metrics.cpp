// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "descatter/autodiff.hpp"

namespace descatter {

namespace {

void check_sizes(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("metric inputs have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                     " pixels");
  }
}

}  // namespace

double mse(std::span<const float> a, std::span<const float> b) {
  check_sizes(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double mse(const Image& a, const Image& b) { return mse(a.pixels(), b.pixels()); }

CorrResult corr_checked(std::span<const float> a, std::span<const float> b) {
  check_sizes(a, b);
  const double count = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= count;
  mb /= count;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

CorrResult corr_checked(const Image& a, const Image& b) { return corr_checked(a.pixels(), b.pixels()); }

double corr(const Image& a, const Image& b) { return corr_checked(a, b).value; }

double bce(std::span<const float> pred, std::span<const float> target) {
  check_sizes(pred, target);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(static_cast<double>(pred[i]), kBceClamp, 1.0 - kBceClamp);
    const double t = target[i];
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(pred.size());
}

}  // namespace descatter
