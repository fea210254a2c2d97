#ifndef TSCHPG_SVG_HPP
#define TSCHPG_SVG_HPP

#include <span>
#include <string>
#include <vector>

namespace tschpg {

// One polyline of a chart; x and y must have equal, nonzero length.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Name of the sibling CSV holding the plotted numbers, embedded as a
  // comment so every figure points back at its data.
  std::string source_csv;
};

std::string xml_escape(const std::string& text);

// Standalone SVG line chart: one polyline per series, axis lines with
// min/max tick labels, a legend, and the source-CSV comment.  Throws
// InputError on empty input or mismatched series lengths.
std::string render_line_chart(std::span<const Series> series,
                              const PlotSpec& spec);

}  // namespace tschpg

#endif  // TSCHPG_SVG_HPP
