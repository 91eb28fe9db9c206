// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "descatter/glyph.hpp"
#include "descatter/metrics.hpp"
#include "descatter/optics.hpp"
#include "descatter/rng.hpp"

namespace descatter {
namespace {

constexpr double kPi = std::numbers::pi;

ComplexField random_field(int n, std::uint64_t seed) {
  RandomStream rng(seed);
  ComplexField f;
  f.n = n;
  f.values.resize(static_cast<std::size_t>(n) * n);
  for (auto& v : f.values) v = Complex(rng.normal(), rng.normal());
  return f;
}

ChannelConfig diffuser_config(std::uint64_t seed = 3) {
  ChannelConfig c;
  c.kind = ChannelKind::diffuser;
  c.seed = seed;
  return c;
}

ChannelConfig mmf_config(std::uint64_t seed = 4) {
  ChannelConfig c;
  c.kind = ChannelKind::mmf;
  c.seed = seed;
  return c;
}

std::vector<Image> digit_objects(int count, int n) {
  std::vector<Image> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(free_channel(render_glyph({kDigits[static_cast<std::size_t>(i % 10)], 100u + i}, n)));
  }
  return out;
}

// Normalized periodic autocorrelation of a zero-mean field at lag (dy, dx).
double autocorrelation(const std::vector<double>& v, int n, int dy, int dx) {
  double num = 0.0, den = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double a = v[static_cast<std::size_t>(r) * n + c];
      num += a * v[static_cast<std::size_t>((r + dy) % n) * n + (c + dx) % n];
      den += a * a;
    }
  }
  return num / den;
}

TEST(AngularSpectrum, ConservesPower) {
  for (double z : {1e-3, 0.02, 0.5}) {
    const ComplexField in = random_field(64, 21);
    const ComplexField out = propagate_angular_spectrum(in, z);
    EXPECT_NEAR(out.power(), in.power(), 1e-6 * in.power()) << "z=" << z;
  }
}

TEST(AngularSpectrum, ZeroDistanceIsIdentity) {
  const ComplexField in = random_field(32, 22);
  const ComplexField out = propagate_angular_spectrum(in, 0.0);
  for (std::size_t i = 0; i < in.values.size(); ++i) EXPECT_LT(std::abs(out.values[i] - in.values[i]), 1e-10);
}

TEST(AngularSpectrum, PlaneWaveAcquiresAnalyticPhase) {
  const int n = 32;
  const double z = 0.013;
  for (auto [p, q] : {std::pair{0, 0}, std::pair{3, -5}, std::pair{-16, 7}}) {
    ComplexField in;
    in.n = n;
    in.values.resize(n * n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) in.values[r * n + c] = std::polar(1.0, 2 * kPi * (q * r + p * c) / n);
    const double fx = p / (n * in.dx), fy = q / (n * in.dx);
    const double kz = 2 * kPi * std::sqrt(1.0 / (in.wavelength * in.wavelength) - fx * fx - fy * fy);
    const Complex phase = std::polar(1.0, kz * z);
    const ComplexField out = propagate_angular_spectrum(in, z);
    for (std::size_t i = 0; i < in.values.size(); ++i) {
      ASSERT_LT(std::abs(out.values[i] - in.values[i] * phase), 1e-9) << p << "," << q;
    }
  }
}

TEST(AngularSpectrum, RejectsNegativeDistance) {
  EXPECT_THROW(propagate_angular_spectrum(random_field(8, 1), -1.0), ConfigError);
}

TEST(TransmissionMatrix, IsUnitary) {
  const TransmissionMatrix tm = TransmissionMatrix::random(256, 9);
  const int s = tm.size();
  double worst = 0.0;
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) {
      Complex dot = 0.0;
      for (int r = 0; r < s; ++r) dot += std::conj(tm.at(r, i)) * tm.at(r, j);
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(TransmissionMatrix, PreservesNormAndIsSeeded) {
  const TransmissionMatrix a = TransmissionMatrix::random(16, 1), b = TransmissionMatrix::random(16, 1),
                           c = TransmissionMatrix::random(16, 2);
  EXPECT_EQ(a.at(3, 5), b.at(3, 5));
  EXPECT_NE(a.at(3, 5), c.at(3, 5));
  const ComplexField v = random_field(4, 5);
  const auto out = a.apply(v.values);
  double in_norm = 0.0, out_norm = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) in_norm += std::norm(v.values[i]), out_norm += std::norm(out[i]);
  EXPECT_NEAR(out_norm, in_norm, 1e-10 * in_norm);
  EXPECT_THROW(a.apply(std::vector<Complex>(15)), ShapeError);
}

TEST(PhaseScreen, HasRequestedStatistics) {
  const int n = 128;
  double at_len = 0.0, far = 0.0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    const auto phase = correlated_phase(n, 4.0, 50u + s);
    double mean = 0.0, var = 0.0;
    for (double v : phase) mean += v;
    mean /= phase.size();
    for (double v : phase) var += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(var / phase.size()), 2 * kPi, 1e-9);
    at_len += 0.5 * (autocorrelation(phase, n, 0, 4) + autocorrelation(phase, n, 4, 0));
    far += autocorrelation(phase, n, 0, 20);
  }
  // exp(-r^2 / l^2) at r = l.
  EXPECT_NEAR(at_len / seeds, std::exp(-1.0), 0.05);
  EXPECT_NEAR(far / seeds, 0.0, 0.05);
}

TEST(PhaseScreen, WrapsIntoHalfOpenInterval) {
  const auto raw = correlated_phase(64, 4.0, 3);
  const auto wrapped = make_phase_screen(64, 4.0, 3);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_GT(wrapped[i], -kPi);
    EXPECT_LE(wrapped[i], kPi);
    const double turns = (raw[i] - wrapped[i]) / (2 * kPi);
    EXPECT_NEAR(turns, std::round(turns), 1e-9);
  }
}

TEST(RotateNearest, QuarterTurnIsAPermutation) {
  const int n = 6;
  std::vector<double> v(n * n);
  for (int i = 0; i < n * n; ++i) v[i] = i;
  EXPECT_EQ(rotate_nearest(v, n, 0.0), v);
  EXPECT_EQ(rotate_nearest(v, n, 360.0), v);
  const auto q = rotate_nearest(v, n, 90.0);
  auto sorted = q;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, v);
  EXPECT_NE(q, v);
  EXPECT_EQ(rotate_nearest(rotate_nearest(q, n, 90.0), n, 180.0), v);
}

TEST(ScatteringChannel, SpecklesAreDecorrelatedFromObjects) {
  const auto objects = digit_objects(10, 64);
  const ScatteringChannel diffuser(diffuser_config(), 64), mmf(mmf_config(), 64);
  double d = 0.0, m = 0.0;
  for (const auto& o : objects) {
    d += std::abs(corr(diffuser.apply(o), o));
    m += std::abs(corr(mmf.apply(o), o));
  }
  EXPECT_LT(d / 10, 0.3);
  EXPECT_LT(m / 10, 0.3);
}

TEST(ScatteringChannel, OutputsAreNormalizedAndDeterministic) {
  const auto objects = digit_objects(2, 64);
  for (const ChannelConfig& cfg : {diffuser_config(), mmf_config()}) {
    const Image a = apply_channel(objects[0], cfg);
    const Image b = apply_channel(objects[0], cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(*std::min_element(a.pixels().begin(), a.pixels().end()), 0.0f);
    EXPECT_EQ(*std::max_element(a.pixels().begin(), a.pixels().end()), 1.0f);
    ChannelConfig other = cfg;
    other.seed += 1;
    EXPECT_NE(apply_channel(objects[0], other), a);
  }
}

TEST(ScatteringChannel, SameMediumGivesCorrelatedResponsesToSimilarObjects) {
  // A fixed medium maps an object and a slightly dimmed copy to nearly the
  // same speckle; a different medium does not.
  const Image o = digit_objects(1, 64)[0];
  Image dim = o;
  for (float& v : dim.pixels()) v *= 0.9f;
  const ChannelConfig cfg = diffuser_config();
  ChannelConfig other = cfg;
  other.seed = 77;
  EXPECT_GT(corr(apply_channel(o, cfg), apply_channel(dim, cfg)), 0.99);
  EXPECT_LT(corr(apply_channel(o, cfg), apply_channel(o, other)), 0.5);
}

TEST(ScatteringChannel, RotationChangesTheDiffuserResponse) {
  const Image o = digit_objects(1, 64)[0];
  ChannelConfig rotated = diffuser_config();
  rotated.diffuser.rotation_deg = 13.0;
  const double c = corr(apply_channel(o, diffuser_config()), apply_channel(o, rotated));
  EXPECT_LT(c, 0.9);
}

TEST(ScatteringChannel, FreeChannelIsNormalization) {
  const Image o = render_glyph({'7', 1}, 32);
  EXPECT_EQ(apply_channel(o, ChannelConfig{}), normalize(o));
}

TEST(ChannelConfig, ValidatesAgainstImageSide) {
  EXPECT_NO_THROW(diffuser_config().validate(64));
  EXPECT_THROW(diffuser_config().validate(48), ConfigError);
  ChannelConfig m = mmf_config();
  EXPECT_NO_THROW(m.validate(64));
  m.mmf.modes = 200;  // not a perfect square
  EXPECT_THROW(m.validate(64), ConfigError);
  m.mmf.modes = 9;  // side 3 does not divide 64
  EXPECT_THROW(m.validate(64), ConfigError);
  EXPECT_THROW(ScatteringChannel(diffuser_config(), 64).apply(Image(32)), ShapeError);
}

TEST(ChannelConfig, KeyValueRoundTrip) {
  ChannelConfig c = diffuser_config(99);
  c.diffuser.rotation_deg = 26.5;
  c.diffuser.z = 0.0123;
  c.mmf.modes = 64;
  KeyValues kv;
  c.store(kv);
  EXPECT_EQ(ChannelConfig::from(kv), c);
  EXPECT_THROW(parse_channel_kind("glass"), ConfigError);
}

TEST(Glyph, RendersEverySymbolAsInkOnBlack) {
  for (std::string_view set : {kDigits, kLetters}) {
    for (char s : set) {
      const Image g = render_glyph({s, 5}, 64);
      float lo = 1.0f, hi = 0.0f;
      double ink = 0.0;
      for (float v : g.pixels()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ink += v;
      }
      EXPECT_EQ(lo, 0.0f) << s;
      EXPECT_EQ(hi, 1.0f) << s;
      const double frac = ink / g.size();
      EXPECT_GT(frac, 0.03) << s;
      EXPECT_LT(frac, 0.3) << s;
    }
  }
}

TEST(Glyph, StyleSeedVariesShapeWithinASymbol) {
  const Image a = render_glyph({'3', 1}, 64), b = render_glyph({'3', 1}, 64), c = render_glyph({'3', 2}, 64);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  double same = 0.0, cross = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    same += corr(render_glyph({'3', s}, 64), render_glyph({'3', s + 100}, 64));
    cross += corr(render_glyph({'3', s}, 64), render_glyph({'7', s + 100}, 64));
  }
  EXPECT_GT(same, cross);
}

TEST(Glyph, RejectsUnsupportedInput) {
  EXPECT_FALSE(glyph_supported('a'));
  EXPECT_THROW(render_glyph({'?', 0}, 64), ConfigError);
  EXPECT_THROW(render_glyph({'1', 0}, 4), ConfigError);
}

}  // namespace
}  // namespace descatter
