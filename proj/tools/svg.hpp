#pragma once

// Minimal SVG line charts for the optional plot outputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace twinpurify::cli {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

/// `step` draws right-continuous steps (Kaplan-Meier style) starting at (0, 1).
inline void write_line_chart(const std::filesystem::path& path, const std::string& title,
                             const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series, bool step = false) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const double W = 640, H = 420, L = 60, R = 150, T = 40, B = 50;
  double xmax = 0.0, ymin = 0.0, ymax = 1.0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmax = std::max(xmax, s.x[i]);
      ymax = std::max(ymax, s.y[i]);
      ymin = std::min(ymin, s.y[i]);
    }
  if (xmax <= 0.0) xmax = 1.0;
  auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto py = [&](double y) { return H - B - (H - T - B) * (y - ymin) / (ymax - ymin); };
  char buf[128];
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
      << "</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B,
                W - R, H - B);
  out << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L,
                H - B);
  out << buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmax * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\">%.3g</text>\n",
                  px(xv), H - B + 16, xv);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%.3g</text>\n",
                  L - 6, py(yv) + 4, yv);
    out << buf;
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << svg_escape(xlabel) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* color = palette[s % 6];
    std::string pts;
    double prev_y = 1.0;
    if (step) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(0.0), py(1.0));
      pts += buf;
    }
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (step) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]), py(prev_y));
        pts += buf;
        prev_y = sr.y[i];
      }
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]), py(sr.y[i]));
      pts += buf;
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    out << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << svg_escape(sr.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace twinpurify::cli
