// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "descatter/fft.hpp"
#include "descatter/image.hpp"
#include "descatter/kv.hpp"

namespace descatter {

enum class ChannelKind { free, diffuser, mmf };

std::string to_string(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& text);

struct DiffuserParams {
  double corr_len_px = 4.0;     // 1/e length of the phase autocorrelation
  double z = 0.02;              // screen-to-detector distance, meters
  double rotation_deg = 0.0;    // screen rotation about the grid center
  int screen_oversize = 2;      // screen grid side = oversize * n
  double pixel_pitch = 20e-6;   // meters
  double wavelength = 880e-9;   // meters

  bool operator==(const DiffuserParams&) const = default;
};

struct MmfParams {
  int modes = 256;  // perfect square

  bool operator==(const MmfParams&) const = default;
};

/// Full parameterization of one forward scattering map.
struct ChannelConfig {
  ChannelKind kind = ChannelKind::free;
  std::uint64_t seed = 1;
  DiffuserParams diffuser;
  MmfParams mmf;

  /// Throws ConfigError if the channel cannot act on n x n images.
  void validate(int n) const;

  /// Writes `channel.*` keys into `kv`.
  void store(KeyValues& kv) const;
  static ChannelConfig from(const KeyValues& kv);

  bool operator==(const ChannelConfig&) const = default;
};

/// Sampled scalar optical field.
struct ComplexField {
  int n = 0;
  std::vector<Complex> values;
  double dx = 20e-6;
  double wavelength = 880e-9;

  double power() const;
};

/// Gaussian-correlated random field with autocorrelation exp(-r^2 / corr_len^2),
/// zero mean and standard deviation 2*pi, before wrapping.
std::vector<double> correlated_phase(int n, double corr_len_px, std::uint64_t seed);

/// correlated_phase wrapped into (-pi, pi].
std::vector<double> make_phase_screen(int n, double corr_len_px, std::uint64_t seed);

/// Nearest-neighbor rotation of a row-major n x n array about its center.
std::vector<double> rotate_nearest(std::span<const double> values, int n, double degrees);

/// Angular-spectrum propagation over distance z >= 0. Evanescent components
/// are removed.
ComplexField propagate_angular_spectrum(const ComplexField& field, double z);

/// Square unitary matrix, row-major.
class TransmissionMatrix {
 public:
  /// Seeded complex Gaussian matrix orthonormalized by modified Gram-Schmidt.
  static TransmissionMatrix random(int size, std::uint64_t seed);

  int size() const noexcept { return size_; }
  const Complex& at(int row, int col) const noexcept {
    return values_[static_cast<std::size_t>(row) * size_ + col];
  }
  std::vector<Complex> apply(std::span<const Complex> v) const;

 private:
  int size_ = 0;
  std::vector<Complex> values_;
};

/// A channel with its medium (phase screen or transmission matrix) prepared
/// once for a given image side. apply() is pure and reentrant.
class ScatteringChannel {
 public:
  ScatteringChannel(const ChannelConfig& config, int n);

  Image apply(const Image& img) const;

  const ChannelConfig& config() const noexcept { return config_; }
  int n() const noexcept { return n_; }

 private:
  Image apply_diffuser(const Image& img) const;
  Image apply_mmf(const Image& img) const;

  ChannelConfig config_;
  int n_;
  std::vector<Complex> screen_;    // exp(i * phase), n x n
  std::vector<Complex> transfer_;  // angular-spectrum transfer function
  TransmissionMatrix tm_;
};

Image diffuser_channel(const Image& img, const ChannelConfig& config);
Image mmf_channel(const Image& img, const ChannelConfig& config);
Image free_channel(const Image& img);
Image apply_channel(const Image& img, const ChannelConfig& config);

}  // namespace descatter
