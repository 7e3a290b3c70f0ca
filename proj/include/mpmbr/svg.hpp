#pragma once

#include <string>
#include <vector>

namespace mpmbr {

struct SvgSeriesPoint {
  double x = 0.0;
  double y = 0.0;
  double lo = 0.0;  // confidence band; set equal to y for none
  double hi = 0.0;
};

// Self-contained line chart with an optional shaded confidence band.
std::string svg_line_chart(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeriesPoint>& points,
                           int width = 640, int height = 400);

// Vertical bar chart; labels render under the bars when they fit.
std::string svg_bar_chart(const std::string& title,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values, int width = 640,
                          int height = 400);

}  // namespace mpmbr
