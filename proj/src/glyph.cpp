// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "descatter/rng.hpp"

namespace descatter {

namespace {

struct Point {
  double x;
  double y;
};
using Stroke = std::vector<Point>;
using Strokes = std::vector<Stroke>;

// Elliptical arc in unit-box coordinates (y grows downward); angles in
// degrees, counter-clockwise on screen.
Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int points) {
  Stroke s;
  for (int i = 0; i < points; ++i) {
    const double a = (a0 + (a1 - a0) * i / (points - 1)) * std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(a), cy - ry * std::sin(a)});
  }
  return s;
}

Stroke join(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::map<char, Strokes>& templates() {
  static const std::map<char, Strokes> table = {
      {'0', {arc(.5, .5, .28, .4, 0, 360, 16)}},
      {'1', {{{.35, .25}, {.55, .1}, {.55, .9}}}},
      {'2', {join(arc(.5, .32, .27, .22, 160, -20, 8), {{.25, .9}, {.8, .9}})}},
      {'3', {arc(.5, .3, .25, .2, 150, -90, 8), arc(.5, .7, .27, .2, 90, -150, 8)}},
      {'4', {{{.65, .9}, {.65, .1}, {.2, .65}, {.82, .65}}}},
      {'5', {join({{.75, .1}, {.3, .1}, {.27, .45}}, arc(.5, .65, .27, .25, 130, -150, 10))}},
      {'6', {join(join({{.7, .12}}, arc(.5, .5, .25, .38, 110, 190, 5)),
                  arc(.5, .68, .25, .22, 180, -180, 12))}},
      {'7', {{{.2, .1}, {.8, .1}, {.4, .9}}}},
      {'8', {arc(.5, .3, .22, .2, 0, 360, 12), arc(.5, .7, .26, .2, 0, 360, 12)}},
      {'9', {arc(.5, .32, .25, .22, 0, 360, 12), {{.75, .32}, {.7, .6}, {.45, .9}}}},
      {'A', {{{.15, .9}, {.5, .1}, {.85, .9}}, {{.3, .6}, {.7, .6}}}},
      {'B', {join(join(join({{.25, .9}, {.25, .1}, {.55, .1}}, arc(.55, .3, .2, .2, 90, -90, 6)),
                       {{.25, .5}, {.6, .5}}),
                  join(arc(.6, .7, .22, .2, 90, -90, 6), {{.25, .9}}))}},
      {'C', {arc(.55, .5, .32, .4, 45, 315, 14)}},
      {'D', {join(join({{.25, .1}, {.25, .9}, {.45, .9}}, arc(.45, .5, .32, .4, -90, 90, 10)),
                  {{.25, .1}})}},
      {'E', {{{.75, .1}, {.25, .1}, {.25, .9}, {.75, .9}}, {{.25, .5}, {.65, .5}}}},
      {'F', {{{.75, .1}, {.25, .1}, {.25, .9}}, {{.25, .5}, {.65, .5}}}},
      {'G', {join(arc(.55, .5, .32, .4, 45, 330, 14), {{.85, .55}, {.6, .55}})}},
      {'H', {{{.25, .1}, {.25, .9}}, {{.75, .1}, {.75, .9}}, {{.25, .5}, {.75, .5}}}},
      {'I', {{{.5, .1}, {.5, .9}}, {{.35, .1}, {.65, .1}}, {{.35, .9}, {.65, .9}}}},
      {'J', {join({{.7, .1}, {.7, .7}}, arc(.5, .7, .2, .2, 0, -180, 8))}},
      {'K', {{{.25, .1}, {.25, .9}}, {{.75, .1}, {.25, .55}, {.75, .9}}}},
      {'L', {{{.25, .1}, {.25, .9}, {.75, .9}}}},
      {'M', {{{.15, .9}, {.2, .1}, {.5, .6}, {.8, .1}, {.85, .9}}}},
      {'N', {{{.25, .9}, {.25, .1}, {.75, .9}, {.75, .1}}}},
      {'O', {arc(.5, .5, .32, .4, 0, 360, 16)}},
      {'P', {join(join({{.25, .9}, {.25, .1}, {.55, .1}}, arc(.55, .3, .2, .2, 90, -90, 6)),
                  {{.25, .5}})}},
      {'Q', {arc(.5, .5, .32, .4, 0, 360, 16), {{.55, .65}, {.85, .95}}}},
      {'R', {join(join({{.25, .9}, {.25, .1}, {.55, .1}}, arc(.55, .3, .2, .2, 90, -90, 6)),
                  {{.25, .5}, {.45, .5}, {.78, .9}})}},
      {'S', {join(arc(.5, .3, .25, .2, 30, 270, 8), arc(.5, .7, .25, .2, 90, -150, 8))}},
      {'T', {{{.15, .1}, {.85, .1}}, {{.5, .1}, {.5, .9}}}},
      {'U', {join(join({{.25, .1}, {.25, .65}}, arc(.5, .65, .25, .25, 180, 360, 8)), {{.75, .1}})}},
      {'V', {{{.15, .1}, {.5, .9}, {.85, .1}}}},
      {'W', {{{.1, .1}, {.3, .9}, {.5, .4}, {.7, .9}, {.9, .1}}}},
      {'X', {{{.2, .1}, {.8, .9}}, {{.8, .1}, {.2, .9}}}},
      {'Y', {{{.2, .1}, {.5, .5}, {.8, .1}}, {{.5, .5}, {.5, .9}}}},
      {'Z', {{{.2, .1}, {.8, .1}, {.2, .9}, {.8, .9}}}},
  };
  return table;
}

double segment_distance(double px, double py, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - a.x - t * dx, py - a.y - t * dy);
}

// Fraction of the frame used by the template's unit box.
constexpr double kBoxLo = 0.18;
constexpr double kBoxHi = 0.82;

}  // namespace

bool glyph_supported(char symbol) { return templates().contains(symbol); }

Image render_glyph(const GlyphSpec& spec, int n) {
  const auto it = templates().find(spec.symbol);
  if (it == templates().end()) {
    throw ConfigError(std::string("render_glyph: unsupported symbol '") + spec.symbol + "'");
  }
  if (n < 8) throw ConfigError("render_glyph: n must be >= 8");

  RandomStream rng(mix64(spec.style_seed ^ (static_cast<std::uint64_t>(spec.symbol) << 56)));
  const double width = rng.uniform(0.05, 0.09) * n;
  const double slant = rng.uniform(-0.15, 0.15);
  const double scale = rng.uniform(0.9, 1.05);
  const double jitter = 0.04 * n;

  std::vector<Stroke> strokes;
  for (const Stroke& tmpl : it->second) {
    Stroke s;
    for (const Point& p : tmpl) {
      const double u = 0.5 + (p.x - 0.5) * scale + slant * (p.y - 0.5) * 0.5;
      const double v = 0.5 + (p.y - 0.5) * scale;
      const double x = (kBoxLo + (kBoxHi - kBoxLo) * u) * n + rng.uniform(-jitter, jitter);
      const double y = (kBoxLo + (kBoxHi - kBoxLo) * v) * n + rng.uniform(-jitter, jitter);
      s.push_back({x, y});
    }
    strokes.push_back(std::move(s));
  }

  Image img(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double px = c + 0.5, py = r + 0.5;
      double d = 1e300;
      for (const Stroke& s : strokes) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, segment_distance(px, py, s[i], s[i + 1]));
      }
      img.at(r, c) = static_cast<float>(std::clamp(width / 2.0 - d + 0.5, 0.0, 1.0));
    }
  }
  return normalize(img);
}

}  // namespace descatter
