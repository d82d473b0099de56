#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"

namespace chronoscope {

enum class ColorBy { year, style };

inline constexpr int kCanvas = 1000;
inline constexpr double kPointRadius = 3.0;
inline constexpr const char* kMissingColor = "#9e9e9e";

/// 20 style colours, one per canonical style in canonical order.
inline constexpr std::array<const char*, 20> kStylePalette = {
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5"};

namespace detail {

inline std::string hex_color(int r, int g, int b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Year gradient: stop i has HSV hue 240 * (1 - i/255) degrees at full
/// saturation and value, running blue, cyan, green, yellow, red. Stops are
/// pairwise distinct.
inline const std::array<std::string, 256>& year_gradient() {
  static const std::array<std::string, 256> stops = [] {
    std::array<std::string, 256> s;
    for (int i = 0; i < 256; ++i) {
      const double h = 240.0 * (1.0 - i / 255.0) / 60.0;
      const int sector = std::min(3, static_cast<int>(h));
      const double f = h - sector;
      const int up = static_cast<int>(std::lround(255.0 * f));
      const int down = 255 - up;
      int r = 0, g = 0, b = 0;
      switch (sector) {
        case 0: r = 255; g = up; break;    // red -> yellow
        case 1: r = down; g = 255; break;  // yellow -> green
        case 2: g = 255; b = up; break;    // green -> cyan
        default: g = down; b = 255; break; // cyan -> blue
      }
      s[static_cast<std::size_t>(i)] = detail::hex_color(r, g, b);
    }
    return s;
  }();
  return stops;
}

inline std::string style_color(std::string_view style) {
  for (std::size_t i = 0; i < kCanonicalStyles.size(); ++i)
    if (kCanonicalStyles[i] == style) return kStylePalette[i];
  return kMissingColor;
}

/// Deterministic 2-D scatter. Points keep embedding row order; the legend
/// is drawn with rect and text elements only.
inline std::string plot_scatter(const Embedding& emb, const Dataset& ds, ColorBy color_by) {
  if (emb.m() != 2) throw Error(Errc::DimensionMismatch, "scatter plot needs a 2-D embedding");
  if (emb.n() == 0) throw Error(Errc::DegenerateEmbedding, "nothing to plot");
  std::vector<const PaintingMeta*> meta(emb.n());
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto r = ds.index_of(emb.ids[i]);
    if (!r) throw Error(Errc::IdMismatch, "embedding id '" + emb.ids[i] + "' not in metadata");
    meta[i] = &ds.meta()[*r];
  }
  double lo[2], hi[2];
  for (int a = 0; a < 2; ++a) {
    lo[a] = hi[a] = emb.coords(0, static_cast<std::size_t>(a));
    for (std::size_t i = 0; i < emb.n(); ++i) {
      const double v = emb.coords(i, static_cast<std::size_t>(a));
      if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite embedding coordinate");
      lo[a] = std::min(lo[a], v);
      hi[a] = std::max(hi[a], v);
    }
  }
  if (!(hi[0] > lo[0]) && !(hi[1] > lo[1]))
    throw Error(Errc::DegenerateEmbedding, "all points coincide");

  // Plot box [50, 750] x [50, 950], equal scale on both axes.
  constexpr double x0 = 50, x1 = 750, y0 = 50, y1 = 950;
  const double sx = hi[0] > lo[0] ? (x1 - x0) / (hi[0] - lo[0]) : 1e300;
  const double sy = hi[1] > lo[1] ? (y1 - y0) / (hi[1] - lo[1]) : 1e300;
  const double scale = std::min(sx, sy);
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double mx = 0.5 * (lo[0] + hi[0]), my = 0.5 * (lo[1] + hi[1]);

  int ymin = 0, ymax = 0;
  bool any_year = false;
  for (const auto* m : meta)
    if (m->year) {
      ymin = any_year ? std::min(ymin, *m->year) : *m->year;
      ymax = any_year ? std::max(ymax, *m->year) : *m->year;
      any_year = true;
    }
  const auto& grad = year_gradient();
  auto color_of = [&](const PaintingMeta& m) -> std::string {
    if (color_by == ColorBy::style) return style_color(m.style);
    if (!m.year) return kMissingColor;
    const int idx = ymax > ymin ? static_cast<int>(std::lround(255.0 * (*m.year - ymin) / (ymax - ymin))) : 0;
    return grad[static_cast<std::size_t>(idx)];
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"1000\" viewBox=\"0 0 1000 1000\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"#ffffff\"/>\n";
  svg += "<rect x=\"50\" y=\"50\" width=\"700\" height=\"900\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  svg += "<g id=\"points\">\n";
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const double px = cx + (emb.coords(i, 0) - mx) * scale;
    const double py = cy - (emb.coords(i, 1) - my) * scale;
    svg += "<circle cx=\"" + detail::fixed3(px) + "\" cy=\"" + detail::fixed3(py) + "\" r=\"3\" fill=\"" +
           color_of(*meta[i]) + "\"/>\n";
  }
  svg += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  if (color_by == ColorBy::year) {
    svg += "<text x=\"780\" y=\"40\">year</text>\n";
    for (int i = 0; i < 256; ++i) {
      // Bar from the latest year at the top to the earliest at the bottom.
      const int top = 50 + (255 - i) * 2;
      svg += "<rect x=\"780\" y=\"" + std::to_string(top) + "\" width=\"20\" height=\"2\" fill=\"" +
             grad[static_cast<std::size_t>(i)] + "\"/>\n";
    }
    const std::string hi_label = any_year ? std::to_string(ymax) : "n/a";
    const std::string lo_label = any_year ? std::to_string(ymin) : "n/a";
    svg += "<text x=\"806\" y=\"60\">" + hi_label + "</text>\n";
    svg += "<text x=\"806\" y=\"562\">" + lo_label + "</text>\n";
    svg += "<rect x=\"780\" y=\"580\" width=\"12\" height=\"12\" fill=\"" + std::string(kMissingColor) + "\"/>\n";
    svg += "<text x=\"798\" y=\"591\">no year</text>\n";
  } else {
    std::vector<std::string> present;
    for (auto s : kCanonicalStyles)
      for (const auto* m : meta)
        if (m->style == s) {
          present.emplace_back(s);
          break;
        }
    bool other = false;
    for (const auto* m : meta)
      if (style_color(m->style) == kMissingColor) other = true;
    svg += "<text x=\"780\" y=\"40\">style</text>\n";
    int y = 50;
    for (const auto& s : present) {
      svg += "<rect x=\"780\" y=\"" + std::to_string(y) + "\" width=\"12\" height=\"12\" fill=\"" + style_color(s) + "\"/>\n";
      svg += "<text x=\"798\" y=\"" + std::to_string(y + 11) + "\">" + detail::xml_escape(s) + "</text>\n";
      y += 20;
    }
    if (other) {
      svg += "<rect x=\"780\" y=\"" + std::to_string(y) + "\" width=\"12\" height=\"12\" fill=\"" + kMissingColor + "\"/>\n";
      svg += "<text x=\"798\" y=\"" + std::to_string(y + 11) + "\">other</text>\n";
    }
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace chronoscope
