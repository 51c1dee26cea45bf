// gantron/plot.hpp

// Copyright 2026  GANtron Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "gantron/common.hpp"

namespace gantron {

struct PlotSeries {
  std::string label;
  std::vector<double> values;  // x is the index
};

inline void write_series_csv(const std::vector<PlotSeries>& series, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), "write_series_csv: cannot open " + path);
  os << "index";
  for (const auto& s : series) os << "," << s.label;
  os << "\n";
  size_t rows = 0;
  for (const auto& s : series) rows = std::max(rows, s.values.size());
  for (size_t r = 0; r < rows; ++r) {
    os << r;
    for (const auto& s : series) {
      os << ",";
      if (r < s.values.size()) os << s.values[r];
    }
    os << "\n";
  }
}

// Minimal self-contained SVG line chart; keeps plots dependency-free.
inline void write_line_chart_svg(const std::vector<PlotSeries>& series, const std::string& title,
                                 const std::string& path) {
  require(!series.empty(), "write_line_chart_svg: no series");
  const double width = 640, height = 400, margin = 50;
  double ymin = 0.0, ymax = 1e-12;
  size_t n = 1;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  const double yspan = ymax - ymin > 0 ? ymax - ymin : 1.0;
  const double xstep = n > 1 ? (width - 2 * margin) / double(n - 1) : 0.0;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream os(path);
  require(bool(os), "write_line_chart_svg: cannot open " + path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
     << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
     << "</text>\n";
  os << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
     << "' y2='" << height - margin << "' stroke='black'/>\n";
  os << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
     << height - margin << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = ymin + yspan * tick / 4.0;
    const double y = height - margin - (v - ymin) / yspan * (height - 2 * margin);
    os << "<text x='" << margin - 6 << "' y='" << y + 4
       << "' text-anchor='end' font-size='10'>" << v << "</text>\n";
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    if (s.values.empty()) continue;
    os << "<polyline fill='none' stroke='" << colors[k % 6] << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.values.size(); ++i) {
      const double x = margin + xstep * double(i);
      const double y = height - margin - (s.values[i] - ymin) / yspan * (height - 2 * margin);
      os << x << "," << y << " ";
    }
    os << "'/>\n";
    os << "<text x='" << width - margin + 4 << "' y='" << margin + 16 * double(k)
       << "' font-size='10' fill='" << colors[k % 6] << "'>" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace gantron
