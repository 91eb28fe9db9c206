// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace descatter {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Panel {
  std::string id;
  std::string title;
  double x0, y0, w, h;
};

}  // namespace

std::string metrics_csv(std::span<const MetricsRecord> rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + r.split + "," + r.channel + "," + format_double(r.mse) + "," +
           format_double(r.corr) + "," + format_double(r.loss) + "\n";
  }
  return out;
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw FormatError("metrics CSV must start with header '" + std::string(kMetricsHeader) + "'", 0);
  }
  std::vector<MetricsRecord> rows;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw FormatError("metrics CSV row needs 6 fields: '" + line + "'", at);
    try {
      std::size_t used = 0;
      MetricsRecord r;
      r.epoch = std::stoi(cells[0], &used);
      r.split = cells[1];
      r.channel = cells[2];
      r.mse = std::stod(cells[3]);
      r.corr = std::stod(cells[4]);
      r.loss = std::stod(cells[5]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw FormatError("metrics CSV row has a non-numeric field: '" + line + "'", at);
    }
  }
  return rows;
}

std::string evaluation_csv(const Evaluation& ev) {
  std::string out = "sample,source_id,mse,corr,loss,corr_degenerate\n";
  for (std::size_t i = 0; i < ev.samples.size(); ++i) {
    const auto& s = ev.samples[i];
    out += std::to_string(i) + "," + s.source_id + "," + format_double(s.mse) + "," + format_double(s.corr) + "," +
           format_double(s.loss) + "," + (s.corr_degenerate ? "1" : "0") + "\n";
  }
  out += "mean,," + format_double(ev.mean_mse) + "," + format_double(ev.mean_corr) + "," +
         format_double(ev.mean_loss) + "," + std::to_string(ev.degenerate) + "\n";
  return out;
}

std::string metrics_svg(std::span<const MetricsRecord> rows) {
  const bool has_test = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.split == "test"; });
  const std::string split = has_test ? "test" : "train";

  std::map<std::string, std::vector<const MetricsRecord*>> series;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (r.split != split) continue;
    if (!series.contains(r.channel)) order.push_back(r.channel);
    series[r.channel].push_back(&r);
  }

  const double width = 960, height = 400;
  const Panel panels[2] = {{"mse", "log10(MSE)", 70, 40, 360, 300}, {"corr", "Corr", 550, 40, 360, 300}};
  auto metric = [](const Panel& p, const MetricsRecord& r) {
    return p.id == "mse" ? std::log10(std::max(r.mse, 1e-12)) : r.corr;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  for (const auto& [name, pts] : series) {
    for (const auto* r : pts) {
      xmin = std::min(xmin, static_cast<double>(r->epoch));
      xmax = std::max(xmax, static_cast<double>(r->epoch));
    }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1;
  if (xmax == xmin) xmax = xmin + 1;

  for (const Panel& p : panels) {
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& [name, pts] : series) {
      for (const auto* r : pts) {
        ymin = std::min(ymin, metric(p, *r));
        ymax = std::max(ymax, metric(p, *r));
      }
    }
    if (p.id == "corr") ymin = std::min(ymin, 0.0), ymax = std::max(ymax, 1.0);
    if (!(ymin <= ymax)) ymin = 0, ymax = 1;
    if (ymax - ymin < 1e-9) ymin -= 0.5, ymax += 0.5;
    auto sx = [&](double x) { return p.x0 + (x - xmin) / (xmax - xmin) * p.w; };
    auto sy = [&](double y) { return p.y0 + p.h - (y - ymin) / (ymax - ymin) * p.h; };

    svg << "<g class=\"panel\" data-panel=\"" << p.id << "\">\n";
    svg << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
        << p.title << " vs epoch (" << split << ")</text>\n";
    svg << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w << "\" height=\"" << p.h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = xmin + (xmax - xmin) * i / 4, yv = ymin + (ymax - ymin) * i / 4;
      svg << "<line class=\"tick\" x1=\"" << sx(xv) << "\" y1=\"" << p.y0 + p.h << "\" x2=\"" << sx(xv)
          << "\" y2=\"" << p.y0 + p.h + 5 << "\" stroke=\"black\"/>"
          << "<text x=\"" << sx(xv) << "\" y=\"" << p.y0 + p.h + 17 << "\" text-anchor=\"middle\">"
          << fmt(xv, "%.0f") << "</text>\n";
      svg << "<line class=\"tick\" x1=\"" << p.x0 - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << p.x0 << "\" y2=\""
          << sy(yv) << "\" stroke=\"black\"/>"
          << "<text x=\"" << p.x0 - 8 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
          << "</text>\n";
    }
    svg << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 34
        << "\" text-anchor=\"middle\">epoch</text>\n";
    for (std::size_t s = 0; s < order.size(); ++s) {
      const auto& pts = series[order[s]];
      const char* color = kPalette[s % std::size(kPalette)];
      svg << "<polyline class=\"series\" data-channel=\"" << order[s] << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        svg << (i ? " " : "") << fmt(sx(pts[i]->epoch), "%.2f") << "," << fmt(sy(metric(p, *pts[i])), "%.2f");
      }
      svg << "\"/>\n";
      const double ly = p.y0 + 14 + 14.0 * static_cast<double>(s);
      svg << "<line x1=\"" << p.x0 + p.w - 90 << "\" y1=\"" << ly - 4 << "\" x2=\"" << p.x0 + p.w - 70
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\""
          << p.x0 + p.w - 65 << "\" y=\"" << ly << "\">" << order[s] << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<char> encode_pgm(const Image& img) {
  const std::string header = "P5\n" + std::to_string(img.n()) + " " + std::to_string(img.n()) + "\n255\n";
  std::vector<char> out(header.begin(), header.end());
  out.reserve(header.size() + img.size());
  for (float v : img.pixels()) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

}  // namespace descatter
