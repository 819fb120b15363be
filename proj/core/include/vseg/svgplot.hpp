#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vseg {

// Minimal static charts written directly as SVG: axes, ticks, legend, one
// polyline or point set per series. Output is deterministic.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
  bool line = true;  // false: scatter only
};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

}  // namespace vseg
