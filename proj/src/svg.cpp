#include "mpmbr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mpmbr {

namespace {

constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

struct Scale {
  double min = 0.0;
  double max = 1.0;
  double lo_px = 0.0;
  double hi_px = 0.0;

  double operator()(double v) const {
    if (max == min) return (lo_px + hi_px) / 2.0;
    return lo_px + (v - min) / (max - min) * (hi_px - lo_px);
  }
};

void chart_frame(std::ostringstream& out, const std::string& title,
                 const std::string& x_label, const std::string& y_label,
                 int width, int height) {
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-size=\"14\" font-family=\"sans-serif\">"
      << escape(title) << "</text>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-size=\"11\" "
         "font-family=\"sans-serif\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"11\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 14 "
      << height / 2 << ")\">" << escape(y_label) << "</text>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << height - kMarginBottom
      << "\" x2=\"" << width - kMarginRight << "\" y2=\""
      << height - kMarginBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << height - kMarginBottom
      << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string svg_line_chart(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeriesPoint>& points,
                           int width, int height) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  chart_frame(out, title, x_label, y_label, width, height);

  if (!points.empty()) {
    Scale xs;
    Scale ys;
    xs.min = xs.max = points[0].x;
    ys.min = ys.max = points[0].lo;
    for (const SvgSeriesPoint& p : points) {
      xs.min = std::min(xs.min, p.x);
      xs.max = std::max(xs.max, p.x);
      ys.min = std::min({ys.min, p.lo, p.y});
      ys.max = std::max({ys.max, p.hi, p.y});
    }
    double pad = (ys.max - ys.min) * 0.08;
    if (pad == 0.0) pad = std::abs(ys.max) * 0.1 + 0.1;
    ys.min -= pad;
    ys.max += pad;
    xs.lo_px = kMarginLeft;
    xs.hi_px = width - kMarginRight;
    ys.lo_px = height - kMarginBottom;  // svg y grows downward
    ys.hi_px = kMarginTop;

    // Confidence band.
    out << "<polygon fill=\"#a8c6e8\" fill-opacity=\"0.5\" points=\"";
    for (const SvgSeriesPoint& p : points) {
      out << fmt(xs(p.x)) << "," << fmt(ys(p.hi)) << " ";
    }
    for (auto it = points.rbegin(); it != points.rend(); ++it) {
      out << fmt(xs(it->x)) << "," << fmt(ys(it->lo)) << " ";
    }
    out << "\"/>\n";

    out << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" "
           "points=\"";
    for (const SvgSeriesPoint& p : points) {
      out << fmt(xs(p.x)) << "," << fmt(ys(p.y)) << " ";
    }
    out << "\"/>\n";
    for (const SvgSeriesPoint& p : points) {
      out << "<circle cx=\"" << fmt(xs(p.x)) << "\" cy=\"" << fmt(ys(p.y))
          << "\" r=\"3\" fill=\"#1f5fa8\"/>\n";
    }
    // Axis extremes.
    out << "<text x=\"" << kMarginLeft << "\" y=\"" << height - kMarginBottom + 16
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(xs.min)
        << "</text>\n";
    out << "<text x=\"" << width - kMarginRight << "\" y=\""
        << height - kMarginBottom + 16
        << "\" text-anchor=\"end\" font-size=\"10\" "
           "font-family=\"sans-serif\">"
        << fmt(xs.max) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 4
        << "\" text-anchor=\"end\" font-size=\"10\" "
           "font-family=\"sans-serif\">"
        << fmt(ys.max) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\""
        << height - kMarginBottom
        << "\" text-anchor=\"end\" font-size=\"10\" "
           "font-family=\"sans-serif\">"
        << fmt(ys.min) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_bar_chart(const std::string& title,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values, int width,
                          int height) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  chart_frame(out, title, "", "", width, height);

  if (!values.empty()) {
    double vmax = *std::max_element(values.begin(), values.end());
    if (vmax <= 0.0) vmax = 1.0;
    const double plot_w = width - kMarginLeft - kMarginRight;
    const double plot_h = height - kMarginTop - kMarginBottom;
    const double slot = plot_w / static_cast<double>(values.size());
    const double bar_w = std::max(1.0, slot * 0.8);
    const bool draw_labels = slot >= 26.0;
    for (size_t i = 0; i < values.size(); ++i) {
      double h = values[i] / vmax * plot_h;
      double x = kMarginLeft + slot * static_cast<double>(i) + (slot - bar_w) / 2;
      double y = height - kMarginBottom - h;
      out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
          << fmt(bar_w) << "\" height=\"" << fmt(h)
          << "\" fill=\"#1f5fa8\"/>\n";
      if (draw_labels && i < labels.size()) {
        out << "<text x=\"" << fmt(x + bar_w / 2) << "\" y=\""
            << height - kMarginBottom + 14
            << "\" text-anchor=\"middle\" font-size=\"9\" "
               "font-family=\"sans-serif\">"
            << escape(labels[i]) << "</text>\n";
      }
    }
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 4
        << "\" text-anchor=\"end\" font-size=\"10\" "
           "font-family=\"sans-serif\">"
        << fmt(vmax) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace mpmbr
