// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "descatter/image.hpp"
#include "descatter/train.hpp"

namespace descatter {

inline constexpr char kMetricsHeader[] = "epoch,split,channel,mse,corr,loss";

std::string metrics_csv(std::span<const MetricsRecord> rows);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);

/// Per-sample rows followed by a `mean` row:
/// sample,source_id,mse,corr,loss,corr_degenerate
std::string evaluation_csv(const Evaluation& ev);

/// Standalone SVG with two panels, log10(MSE) and Corr against epoch, one
/// polyline per channel. Test rows are plotted when present, otherwise
/// training rows.
std::string metrics_svg(std::span<const MetricsRecord> rows);

/// 8-bit binary graymap; pixels are clamped to [0, 1] and scaled to 255.
std::vector<char> encode_pgm(const Image& img);

}  // namespace descatter
