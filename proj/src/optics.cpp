// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "descatter/rng.hpp"

namespace descatter {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPhaseStd = 2.0 * kPi;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int integer_sqrt(int v) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

// Angular frequency of FFT bin i for an n-point grid with pitch dx.
double angular_frequency(int i, int n, double dx) {
  const int k = i < (n + 1) / 2 ? i : i - n;
  return 2.0 * kPi * k / (n * dx);
}

std::vector<Complex> transfer_function(int n, double dx, double wavelength, double z) {
  const double k = 2.0 * kPi / wavelength;
  std::vector<Complex> h(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    const double ky = angular_frequency(r, n, dx);
    for (int c = 0; c < n; ++c) {
      const double kx = angular_frequency(c, n, dx);
      const double kz2 = k * k - kx * kx - ky * ky;
      h[static_cast<std::size_t>(r) * n + c] =
          kz2 > 0.0 ? std::polar(1.0, z * std::sqrt(kz2)) : Complex(0.0, 0.0);
    }
  }
  return h;
}

}  // namespace

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::free: return "free";
    case ChannelKind::diffuser: return "diffuser";
    case ChannelKind::mmf: return "mmf";
  }
  return "unknown";
}

ChannelKind parse_channel_kind(const std::string& text) {
  if (text == "free") return ChannelKind::free;
  if (text == "diffuser") return ChannelKind::diffuser;
  if (text == "mmf") return ChannelKind::mmf;
  throw ConfigError("unknown channel '" + text + "' (expected free, diffuser or mmf)");
}

void ChannelConfig::validate(int n) const {
  if (n < 1) throw ConfigError("channel: image side must be positive");
  if (kind == ChannelKind::diffuser) {
    if (!is_power_of_two(n) || n < 32) {
      throw ConfigError("diffuser: n must be a power of two >= 32, got " + std::to_string(n));
    }
    if (!(diffuser.corr_len_px >= 1.0)) throw ConfigError("diffuser: corr_len_px must be >= 1");
    if (!(diffuser.z >= 0.0)) throw ConfigError("diffuser: z must be >= 0");
    if (diffuser.screen_oversize < 1) throw ConfigError("diffuser: screen_oversize must be >= 1");
    if (!(diffuser.pixel_pitch > 0.0) || !(diffuser.wavelength > 0.0)) {
      throw ConfigError("diffuser: pixel_pitch and wavelength must be positive");
    }
    if (!std::isfinite(diffuser.rotation_deg)) throw ConfigError("diffuser: rotation must be finite");
  } else if (kind == ChannelKind::mmf) {
    const int m = integer_sqrt(mmf.modes);
    if (mmf.modes < 1 || m * m != mmf.modes) {
      throw ConfigError("mmf: modes must be a positive perfect square, got " + std::to_string(mmf.modes));
    }
    if (m > n || n % m != 0) {
      throw ConfigError("mmf: mode grid " + std::to_string(m) + " must divide image side " +
                        std::to_string(n));
    }
  }
}

void ChannelConfig::store(KeyValues& kv) const {
  kv.set("channel.kind", to_string(kind));
  kv.set("channel.seed", std::to_string(seed));
  kv.set("channel.diffuser.corr_len_px", format_double(diffuser.corr_len_px));
  kv.set("channel.diffuser.z", format_double(diffuser.z));
  kv.set("channel.diffuser.rotation_deg", format_double(diffuser.rotation_deg));
  kv.set("channel.diffuser.screen_oversize", std::to_string(diffuser.screen_oversize));
  kv.set("channel.diffuser.pixel_pitch", format_double(diffuser.pixel_pitch));
  kv.set("channel.diffuser.wavelength", format_double(diffuser.wavelength));
  kv.set("channel.mmf.modes", std::to_string(mmf.modes));
}

ChannelConfig ChannelConfig::from(const KeyValues& kv) {
  ChannelConfig c;
  const DiffuserParams d;
  c.kind = parse_channel_kind(kv.get("channel.kind"));
  c.seed = kv.get_u64_or("channel.seed", c.seed);
  c.diffuser.corr_len_px = kv.get_double_or("channel.diffuser.corr_len_px", d.corr_len_px);
  c.diffuser.z = kv.get_double_or("channel.diffuser.z", d.z);
  c.diffuser.rotation_deg = kv.get_double_or("channel.diffuser.rotation_deg", d.rotation_deg);
  c.diffuser.screen_oversize = kv.get_int_or("channel.diffuser.screen_oversize", d.screen_oversize);
  c.diffuser.pixel_pitch = kv.get_double_or("channel.diffuser.pixel_pitch", d.pixel_pitch);
  c.diffuser.wavelength = kv.get_double_or("channel.diffuser.wavelength", d.wavelength);
  c.mmf.modes = kv.get_int_or("channel.mmf.modes", MmfParams{}.modes);
  return c;
}

double ComplexField::power() const {
  double p = 0.0;
  for (const auto& v : values) p += std::norm(v);
  return p;
}

std::vector<double> correlated_phase(int n, double corr_len_px, std::uint64_t seed) {
  if (n < 2 || !is_power_of_two(n)) {
    throw ConfigError("phase screen: n must be a power of two, got " + std::to_string(n));
  }
  if (!(corr_len_px >= 1.0)) throw ConfigError("phase screen: corr_len_px must be >= 1");
  const std::size_t count = static_cast<std::size_t>(n) * n;
  RandomStream rng(mix64(seed ^ 0x5c4e3d2f1a0b9c8dULL));
  std::vector<Complex> buf(count);
  for (auto& v : buf) v = Complex(rng.normal(), 0.0);
  fft2(buf, n, false);
  // White noise filtered by a Gaussian of standard deviation sigma has an
  // autocorrelation of exp(-r^2 / (4 sigma^2)); sigma = corr_len / 2.
  const double sigma = corr_len_px / 2.0;
  for (int r = 0; r < n; ++r) {
    const int fr = r < n / 2 ? r : r - n;
    for (int c = 0; c < n; ++c) {
      const int fc = c < n / 2 ? c : c - n;
      const double f2 = (static_cast<double>(fr) * fr + static_cast<double>(fc) * fc) / (static_cast<double>(n) * n);
      buf[static_cast<std::size_t>(r) * n + c] *= std::exp(-2.0 * kPi * kPi * sigma * sigma * f2);
    }
  }
  fft2(buf, n, true);
  std::vector<double> out(count);
  double mean = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = buf[i].real();
    mean += out[i];
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (double& v : out) {
    v -= mean;
    var += v * v;
  }
  const double scale = var > 0.0 ? kPhaseStd / std::sqrt(var / static_cast<double>(count)) : 0.0;
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> make_phase_screen(int n, double corr_len_px, std::uint64_t seed) {
  std::vector<double> phase = correlated_phase(n, corr_len_px, seed);
  for (double& v : phase) {
    v = kPi - std::fmod(std::fmod(kPi - v, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi);
  }
  return phase;
}

std::vector<double> rotate_nearest(std::span<const double> values, int n, double degrees) {
  if (values.size() != static_cast<std::size_t>(n) * n) {
    throw ShapeError("rotate_nearest: buffer does not match side " + std::to_string(n));
  }
  const double t = degrees * kPi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  const double center = (n - 1) / 2.0;
  std::vector<double> out(values.size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double x = c - center, y = r - center;
      const double sx = ct * x + st * y + center;
      const double sy = -st * x + ct * y + center;
      const int ix = std::clamp(static_cast<int>(std::floor(sx + 0.5)), 0, n - 1);
      const int iy = std::clamp(static_cast<int>(std::floor(sy + 0.5)), 0, n - 1);
      out[static_cast<std::size_t>(r) * n + c] = values[static_cast<std::size_t>(iy) * n + ix];
    }
  }
  return out;
}

ComplexField propagate_angular_spectrum(const ComplexField& field, double z) {
  if (!(z >= 0.0)) throw ConfigError("propagation distance must be >= 0");
  ComplexField out = field;
  fft2(out.values, out.n, false);
  const auto h = transfer_function(field.n, field.dx, field.wavelength, z);
  for (std::size_t i = 0; i < h.size(); ++i) out.values[i] *= h[i];
  fft2(out.values, out.n, true);
  return out;
}

TransmissionMatrix TransmissionMatrix::random(int size, std::uint64_t seed) {
  if (size < 1) throw ConfigError("transmission matrix size must be positive");
  TransmissionMatrix tm;
  tm.size_ = size;
  const std::size_t s = static_cast<std::size_t>(size);
  // Column-major working copy so each Gram-Schmidt column is contiguous.
  std::vector<Complex> cols(s * s);
  RandomStream rng(mix64(seed ^ 0x7f4a7c159e3779b9ULL));
  const double amp = 1.0 / std::sqrt(2.0);
  for (auto& v : cols) {
    const double re = rng.normal();
    const double im = rng.normal();
    v = Complex(re * amp, im * amp);
  }
  for (std::size_t j = 0; j < s; ++j) {
    Complex* cj = cols.data() + j * s;
    // Two passes of modified Gram-Schmidt keep the basis orthonormal to
    // machine precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const Complex* ci = cols.data() + i * s;
        Complex dot = 0.0;
        for (std::size_t r = 0; r < s; ++r) dot += std::conj(ci[r]) * cj[r];
        for (std::size_t r = 0; r < s; ++r) cj[r] -= dot * ci[r];
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < s; ++r) norm += std::norm(cj[r]);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < s; ++r) cj[r] /= norm;
  }
  tm.values_.resize(s * s);
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s; ++c) tm.values_[r * s + c] = cols[c * s + r];
  }
  return tm;
}

std::vector<Complex> TransmissionMatrix::apply(std::span<const Complex> v) const {
  if (v.size() != static_cast<std::size_t>(size_)) {
    throw ShapeError("transmission matrix of size " + std::to_string(size_) +
                     " applied to a vector of length " + std::to_string(v.size()));
  }
  std::vector<Complex> out(v.size());
  for (int r = 0; r < size_; ++r) {
    Complex acc = 0.0;
    const Complex* row = values_.data() + static_cast<std::size_t>(r) * size_;
    for (int c = 0; c < size_; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

ScatteringChannel::ScatteringChannel(const ChannelConfig& config, int n) : config_(config), n_(n) {
  config_.validate(n);
  if (config_.kind == ChannelKind::diffuser) {
    const DiffuserParams& d = config_.diffuser;
    const int m = d.screen_oversize * n;
    std::vector<double> big = make_phase_screen(m, d.corr_len_px, config_.seed);
    if (d.rotation_deg != 0.0) big = rotate_nearest(big, m, d.rotation_deg);
    const int off = (m - n) / 2;
    screen_.resize(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        screen_[static_cast<std::size_t>(r) * n + c] =
            std::polar(1.0, big[static_cast<std::size_t>(r + off) * m + (c + off)]);
      }
    }
    transfer_ = transfer_function(n, d.pixel_pitch, d.wavelength, d.z);
  } else if (config_.kind == ChannelKind::mmf) {
    tm_ = TransmissionMatrix::random(config_.mmf.modes, config_.seed);
  }
}

Image ScatteringChannel::apply(const Image& img) const {
  if (img.n() != n_) {
    throw ShapeError("channel prepared for side " + std::to_string(n_) + " got image of side " +
                     std::to_string(img.n()));
  }
  switch (config_.kind) {
    case ChannelKind::free: return free_channel(img);
    case ChannelKind::diffuser: return apply_diffuser(img);
    case ChannelKind::mmf: return apply_mmf(img);
  }
  return img;
}

Image ScatteringChannel::apply_diffuser(const Image& img) const {
  const std::size_t count = img.size();
  std::vector<Complex> field(count);
  const auto px = img.pixels();
  for (std::size_t i = 0; i < count; ++i) {
    field[i] = std::sqrt(std::max(0.0, static_cast<double>(px[i]))) * screen_[i];
  }
  fft2(field, n_, false);
  for (std::size_t i = 0; i < count; ++i) field[i] *= transfer_[i];
  fft2(field, n_, true);
  std::vector<double> intensity(count);
  for (std::size_t i = 0; i < count; ++i) intensity[i] = std::norm(field[i]);
  return normalize(n_, intensity);
}

Image ScatteringChannel::apply_mmf(const Image& img) const {
  const int m = integer_sqrt(config_.mmf.modes);
  const int block = n_ / m;
  std::vector<Complex> v(static_cast<std::size_t>(m) * m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      double acc = 0.0;
      for (int y = r * block; y < (r + 1) * block; ++y) {
        for (int x = c * block; x < (c + 1) * block; ++x) {
          acc += std::sqrt(std::max(0.0, static_cast<double>(img.at(y, x))));
        }
      }
      v[static_cast<std::size_t>(r) * m + c] = acc / (block * block);
    }
  }
  const std::vector<Complex> out = tm_.apply(v);
  Image speckle(m);
  for (std::size_t i = 0; i < out.size(); ++i) speckle.storage()[i] = static_cast<float>(std::norm(out[i]));
  return normalize(resize_bilinear(speckle, n_));
}

Image diffuser_channel(const Image& img, const ChannelConfig& config) {
  if (config.kind != ChannelKind::diffuser) throw ConfigError("diffuser_channel: config kind is " + to_string(config.kind));
  return ScatteringChannel(config, img.n()).apply(img);
}

Image mmf_channel(const Image& img, const ChannelConfig& config) {
  if (config.kind != ChannelKind::mmf) throw ConfigError("mmf_channel: config kind is " + to_string(config.kind));
  return ScatteringChannel(config, img.n()).apply(img);
}

Image free_channel(const Image& img) { return normalize(img); }

Image apply_channel(const Image& img, const ChannelConfig& config) {
  return ScatteringChannel(config, img.n()).apply(img);
}

}  // namespace descatter
