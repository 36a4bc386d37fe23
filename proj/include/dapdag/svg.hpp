#pragma once

// Minimal static SVG charts: line charts and scatter plots with linear axes.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dapdag {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return colors[i % 7];
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double left = 70, right = 150, top = 40, bottom = 55;
  int width = 640, height = 420;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline Frame make_frame(const std::vector<Series>& series, const ChartSpec& spec) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  Frame f;
  f.x0 = x0;
  f.x1 = x1;
  f.y0 = y0 - pad;
  f.y1 = y1 + pad;
  f.width = spec.width;
  f.height = spec.height;
  return f;
}

inline void axes(std::ostringstream& os, const Frame& f, const ChartSpec& spec) {
  os << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\"" << f.height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << xml_escape(spec.title) << "</text>\n";
  const double xa = f.py(f.y0), ya = f.px(f.x0);
  os << "<line x1=\"" << ya << "\" y1=\"" << xa << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << xa
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ya << "\" y1=\"" << xa << "\" x2=\"" << ya << "\" y2=\"" << f.py(f.y1)
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x=\"" << f.px(xv) << "\" y=\"" << xa + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << num(xv) << "</text>\n";
    os << "<text x=\"" << ya - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << (f.px(f.x0) + f.px(f.x1)) / 2 << "\" y=\"" << f.height - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(spec.x_label) << "</text>\n";
  const double cy = (f.py(f.y0) + f.py(f.y1)) / 2;
  os << "<text x=\"16\" y=\"" << cy << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << cy << ")\">" << xml_escape(spec.y_label) << "</text>\n";
}

inline void legend(std::ostringstream& os, const Frame& f, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double x = f.width - f.right + 15, y = f.top + 10 + 18.0 * static_cast<double>(i);
    os << "<rect x=\"" << x << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\"" << palette(i)
       << "\"/>\n";
    os << "<text x=\"" << x + 15 << "\" y=\"" << y + 1 << "\" font-size=\"11\">" << xml_escape(series[i].name)
       << "</text>\n";
  }
}

inline std::string open_svg(const ChartSpec& spec) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(spec.width) + "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
         std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
}

}  // namespace detail

/// Polyline per series, points joined in the given order. Non-finite points are skipped.
inline std::string svg_line_chart(const std::vector<Series>& series, const ChartSpec& spec) {
  const auto f = detail::make_frame(series, spec);
  std::ostringstream os;
  os << detail::open_svg(spec);
  detail::axes(os, f, spec);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (const auto& [x, y] : series[i].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts += detail::num(f.px(x)) + "," + detail::num(f.py(y)) + " ";
      os << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y) << "\" r=\"3\" fill=\"" << detail::palette(i)
         << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << detail::palette(i) << "\" stroke-width=\"1.5\" points=\"" << pts
       << "\"/>\n";
  }
  detail::legend(os, f, series);
  os << "</svg>\n";
  return os.str();
}

inline std::string svg_scatter(const std::vector<Series>& series, const ChartSpec& spec) {
  const auto f = detail::make_frame(series, spec);
  std::ostringstream os;
  os << detail::open_svg(spec);
  detail::axes(os, f, spec);
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (const auto& [x, y] : series[i].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y) << "\" r=\"3.5\" fill-opacity=\"0.7\" fill=\""
         << detail::palette(i) << "\"/>\n";
    }
  }
  detail::legend(os, f, series);
  os << "</svg>\n";
  return os.str();
}

}  // namespace dapdag
