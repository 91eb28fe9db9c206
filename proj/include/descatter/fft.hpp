// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>

namespace descatter {

using Complex = std::complex<double>;

/// In-place radix-2 FFT of a power-of-two length. The inverse transform
/// includes the 1/N factor.
void fft(std::span<Complex> data, bool inverse);

/// In-place 2-D FFT of a row-major n x n array (n a power of two).
void fft2(std::span<Complex> data, int n, bool inverse);

}  // namespace descatter
