#include "tschpg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tschpg/csv.hpp"
#include "tschpg/errors.hpp"

namespace tschpg {

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = kWidth - 170.0;   // legend column on the right
constexpr double kTop = 45.0;
constexpr double kBottom = kHeight - 55.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  // Scale range, padded when the data range is degenerate.
  double scale_lo = 0.0;
  double scale_hi = 1.0;
};

Range data_range(std::span<const Series> series, bool use_x) {
  Range r;
  bool first = true;
  for (const Series& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v)) throw InputError("non-finite plot value");
      if (first || v < r.lo) r.lo = v;
      if (first || v > r.hi) r.hi = v;
      first = false;
    }
  }
  r.scale_lo = r.lo;
  r.scale_hi = r.hi;
  if (r.scale_hi <= r.scale_lo) {
    const double pad = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
    r.scale_lo -= pad;
    r.scale_hi += pad;
  }
  return r;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_line_chart(std::span<const Series> series,
                              const PlotSpec& spec) {
  if (series.empty()) throw InputError("a chart needs at least one series");
  for (const Series& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) {
      throw InputError("series '" + s.label + "' has mismatched x/y lengths");
    }
  }
  const Range rx = data_range(series, true);
  const Range ry = data_range(series, false);
  const auto sx = [&](double v) {
    return kLeft + (v - rx.scale_lo) / (rx.scale_hi - rx.scale_lo) *
                       (kRight - kLeft);
  };
  const auto sy = [&](double v) {
    return kBottom - (v - ry.scale_lo) / (ry.scale_hi - ry.scale_lo) *
                         (kBottom - kTop);
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!spec.source_csv.empty()) {
    out << "<!-- source: " << spec.source_csv << " -->\n";
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << px((kLeft + kRight) / 2) << "\" y=\"24\" "
      << "text-anchor=\"middle\" font-size=\"16\">" << xml_escape(spec.title)
      << "</text>\n";

  // Axes.
  out << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kBottom) << "\" x2=\""
      << px(kRight) << "\" y2=\"" << px(kBottom)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kBottom) << "\" x2=\""
      << px(kLeft) << "\" y2=\"" << px(kTop)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Min/max tick marks and labels, anchored at the data extremes.
  const auto x_tick = [&](double v) {
    out << "<line x1=\"" << px(sx(v)) << "\" y1=\"" << px(kBottom) << "\" x2=\""
        << px(sx(v)) << "\" y2=\"" << px(kBottom + 5)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text class=\"xtick\" x=\"" << px(sx(v)) << "\" y=\""
        << px(kBottom + 20) << "\" text-anchor=\"middle\">" << format_double(v)
        << "</text>\n";
  };
  const auto y_tick = [&](double v) {
    out << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(sy(v))
        << "\" x2=\"" << px(kLeft) << "\" y2=\"" << px(sy(v))
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text class=\"ytick\" x=\"" << px(kLeft - 8) << "\" y=\""
        << px(sy(v) + 4) << "\" text-anchor=\"end\">" << format_double(v)
        << "</text>\n";
  };
  x_tick(rx.lo);
  if (rx.hi != rx.lo) x_tick(rx.hi);
  y_tick(ry.lo);
  if (ry.hi != ry.lo) y_tick(ry.hi);

  // Axis labels.
  out << "<text x=\"" << px((kLeft + kRight) / 2) << "\" y=\""
      << px(kHeight - 12) << "\" text-anchor=\"middle\">"
      << xml_escape(spec.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << px((kTop + kBottom) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px((kTop + kBottom) / 2) << ")\">" << xml_escape(spec.y_label)
      << "</text>\n";

  // Data.
  for (size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kPalette[i % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
    for (size_t j = 0; j < s.x.size(); ++j) {
      if (j) out << ' ';
      out << px(sx(s.x[j])) << ',' << px(sy(s.y[j]));
    }
    out << "\"/>\n";
    // Single-point series would be invisible as a polyline alone.
    if (s.x.size() == 1) {
      out << "<circle cx=\"" << px(sx(s.x[0])) << "\" cy=\"" << px(sy(s.y[0]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }

  // Legend.
  for (size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 22.0 * static_cast<double>(i);
    const char* color = kPalette[i % kPaletteSize];
    out << "<line x1=\"" << px(kRight + 14) << "\" y1=\"" << px(y) << "\" x2=\""
        << px(kRight + 40) << "\" y2=\"" << px(y) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"/>\n";
    out << "<text x=\"" << px(kRight + 46) << "\" y=\"" << px(y + 4) << "\">"
        << xml_escape(series[i].label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace tschpg
