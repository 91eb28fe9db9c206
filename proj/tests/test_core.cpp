// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "descatter/fft.hpp"
#include "descatter/image.hpp"
#include "descatter/kv.hpp"
#include "descatter/rng.hpp"

namespace descatter {
namespace {

std::vector<Complex> naive_dft(const std::vector<Complex>& x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(j * k % n) / static_cast<double>(n);
      acc += x[j] * Complex(std::cos(a), std::sin(a));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

TEST(Mix64, MatchesSplitMix64ReferenceOutput) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}

TEST(RandomStream, EngineIsStandardMersenneTwister) {
  // The standard pins the 10000th output of a default-seeded mt19937_64.
  RandomStream rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(RandomStream, UniformPassesChiSquare) {
  RandomStream rng(3);
  constexpr int kBins = 20, kDraws = 200000;
  std::vector<int> counts(kBins);
  for (int i = 0; i < kDraws; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[static_cast<std::size_t>(u * kBins)];
  }
  const double expected = static_cast<double>(kDraws) / kBins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 43.82);  // 19 dof, p = 0.001
}

TEST(RandomStream, IndexPassesChiSquare) {
  RandomStream rng(4);
  constexpr int kN = 7, kDraws = 70000;
  std::vector<int> counts(kN);
  for (int i = 0; i < kDraws; ++i) ++counts[rng.index(kN)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 22.46);  // 6 dof, p = 0.001
}

TEST(RandomStream, NormalHasUnitMomentsAndGaussianTails) {
  RandomStream rng(5);
  constexpr int kDraws = 200000;
  double s = 0.0, s2 = 0.0;
  int beyond2 = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    beyond2 += std::abs(x) > 2.0;
  }
  EXPECT_NEAR(s / kDraws, 0.0, 0.01);
  EXPECT_NEAR(s2 / kDraws, 1.0, 0.015);
  EXPECT_NEAR(static_cast<double>(beyond2) / kDraws, 0.0455, 0.003);
}

TEST(RandomStream, ShuffleIsAPermutationAndSeedDependent) {
  std::vector<int> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  RandomStream r1(9), r2(10);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_NE(a, b);
  std::sort(a.begin(), a.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a[static_cast<std::size_t>(i)], i);
}

TEST(DeriveRng, StreamsDependOnlyOnMasterAndIndex) {
  RandomStream a = derive_rng(1, 5);
  RandomStream b = derive_rng(1, 5);
  RandomStream c = derive_rng(1, 6);
  RandomStream d = derive_rng(2, 5);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(Fft, MatchesNaiveDft) {
  RandomStream rng(11);
  for (std::size_t n : {1u, 2u, 8u, 16u, 64u}) {
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex(rng.normal(), rng.normal());
    for (bool inverse : {false, true}) {
      auto got = x;
      fft(got, inverse);
      const auto want = naive_dft(x, inverse);
      for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(got[k] - want[k]), 1e-10) << n << " " << k;
    }
  }
}

TEST(Fft, RoundTripAndParseval2d) {
  RandomStream rng(12);
  const int n = 32;
  std::vector<Complex> x(static_cast<std::size_t>(n * n));
  for (auto& v : x) v = Complex(rng.normal(), rng.normal());
  auto y = x;
  fft2(y, n, false);
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ex += std::norm(x[i]), ey += std::norm(y[i]);
  EXPECT_NEAR(ey / (n * n), ex, 1e-9 * ex);
  fft2(y, n, true);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LT(std::abs(y[i] - x[i]), 1e-12);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<Complex> x(12);
  EXPECT_THROW(fft(x, false), ShapeError);
  std::vector<Complex> y(36);
  EXPECT_THROW(fft2(y, 6, false), ShapeError);
}

TEST(ResizeBilinear, MatchesAlignCornersFormula) {
  RandomStream rng(13);
  std::vector<float> px(5 * 5);
  for (auto& v : px) v = static_cast<float>(rng.uniform());
  const Image src(5, px);
  const Image out = resize_bilinear(src, 17);
  ASSERT_EQ(out.n(), 17);
  for (int r = 0; r < 17; ++r) {
    for (int c = 0; c < 17; ++c) {
      const double y = r * 4.0 / 16.0, x = c * 4.0 / 16.0;
      const int y0 = std::min(static_cast<int>(y), 3), x0 = std::min(static_cast<int>(x), 3);
      const double fy = y - y0, fx = x - x0;
      const double want = (1 - fy) * ((1 - fx) * src.at(y0, x0) + fx * src.at(y0, x0 + 1)) +
                          fy * ((1 - fx) * src.at(y0 + 1, x0) + fx * src.at(y0 + 1, x0 + 1));
      EXPECT_NEAR(out.at(r, c), want, 1e-6);
    }
  }
  EXPECT_EQ(out.at(0, 0), src.at(0, 0));
  EXPECT_EQ(out.at(16, 16), src.at(4, 4));
  EXPECT_EQ(out.at(0, 16), src.at(0, 4));
}

TEST(ResizeBilinear, IdentityAndDownsizeRejected) {
  const Image src(4, std::vector<float>(16, 0.25f));
  EXPECT_EQ(resize_bilinear(src, 4), src);
  EXPECT_THROW(resize_bilinear(src, 2), ConfigError);
}

TEST(Normalize, MapsToUnitRangeAndConstantToZero) {
  const Image img(2, std::vector<float>{2.0f, 4.0f, 3.0f, 6.0f});
  const Image out = normalize(img);
  EXPECT_EQ(out.pixels()[0], 0.0f);
  EXPECT_EQ(out.pixels()[3], 1.0f);
  EXPECT_FLOAT_EQ(out.pixels()[1], 0.5f);
  const Image flat = normalize(Image(3, 7.0f));
  for (float v : flat.pixels()) EXPECT_EQ(v, 0.0f);
}

TEST(KeyValues, ParsesCommentsAndPreservesOrder) {
  const auto kv = KeyValues::parse("# header\nb = 2\n\na=  x y  \nc = 1e-3\nflag = true\n");
  ASSERT_EQ(kv.entries().size(), 4u);
  EXPECT_EQ(kv.entries()[0].first, "b");
  EXPECT_EQ(kv.get("a"), "x y");
  EXPECT_EQ(kv.get_int("b"), 2);
  EXPECT_DOUBLE_EQ(kv.get_double("c"), 1e-3);
  EXPECT_TRUE(kv.get_bool_or("flag", false));
  EXPECT_EQ(kv.get_or("missing", "d"), "d");
  EXPECT_THROW(kv.get("missing"), ConfigError);
  EXPECT_THROW(kv.get_int("a"), ConfigError);
  EXPECT_EQ(KeyValues::parse(kv.to_text()).entries(), kv.entries());
}

TEST(KeyValues, RejectsLinesWithoutSeparator) {
  EXPECT_THROW(KeyValues::parse("just text\n"), ConfigError);
}

TEST(FormatDouble, RoundTripsExactly) {
  RandomStream rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-12, 12));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace descatter
