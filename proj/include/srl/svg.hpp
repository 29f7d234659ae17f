#pragma once

#include <optional>
#include <string>
#include <vector>

namespace srl {

/// Minimal native SVG line/heatmap plots: log or linear axes, polylines,
/// reference lines, legends, faceting. CSV files are the ground truth; these
/// figures are a convenience view of them.
namespace svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#1f6fb4";
  bool dashed = false;
  double width = 1.3;
};

struct RefLine {
  enum Kind { Vertical, Horizontal, Diagonal } kind = Vertical;
  double value = 0.0;  // x for vertical, y for horizontal; unused for diagonal
  std::string color = "#888888";
  std::string label;
};

struct HeatCell {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;  // in [0,1]
  bool missing = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool x_log = false;
  bool y_log = false;
  std::vector<Series> series;
  std::vector<RefLine> ref_lines;
  std::vector<HeatCell> heat;  // drawn behind the series
  bool legend = true;
};

/// Renders one plot as a standalone SVG document.
std::string render(const Plot& plot, int width = 560, int height = 420);

/// Renders a grid of facets (row-major) as one SVG document.
std::string render_grid(const std::vector<Plot>& facets, int cols,
                        int cell_width = 360, int cell_height = 300);

}  // namespace svg
}  // namespace srl
