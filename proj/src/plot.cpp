// Copyright 2026 The hcmpc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hcmpc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hcmpc {
namespace {

constexpr double kWidth = 900.0;
constexpr double kPanelHeight = 240.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string Escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Guarantees a non-empty finite span.
  void Settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void Text(std::ostream& out, double x, double y, const std::string& s,
          const char* anchor = "middle", int size = 12) {
  out << "<text x=\"" << Fmt(x) << "\" y=\"" << Fmt(y)
      << "\" font-family=\"sans-serif\" font-size=\"" << size
      << "\" text-anchor=\"" << anchor << "\">" << Escape(s) << "</text>\n";
}

void Line(std::ostream& out, double x0, double y0, double x1, double y1,
          const char* color = "#000", double width = 1.0) {
  out << "<line x1=\"" << Fmt(x0) << "\" y1=\"" << Fmt(y0) << "\" x2=\""
      << Fmt(x1) << "\" y2=\"" << Fmt(y1) << "\" stroke=\"" << color
      << "\" stroke-width=\"" << width << "\"/>\n";
}

// Frame with four ticks per axis; the maps convert data to pixels.
void Axes(std::ostream& out, double top, double height, const Range& xr,
          const Range& yr, bool x_ticks) {
  const double plot_w = kWidth - kLeft - kRight;
  out << "<rect x=\"" << kLeft << "\" y=\"" << Fmt(top) << "\" width=\""
      << Fmt(plot_w) << "\" height=\"" << Fmt(height)
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double py = top + height - height * i / 4.0;
    Line(out, kLeft - 4, py, kLeft, py);
    Line(out, kLeft, py, kLeft + plot_w, py, "#ddd", 0.5);
    Text(out, kLeft - 6, py + 4, Fmt(fy), "end", 10);
    if (x_ticks) {
      const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
      const double px = kLeft + plot_w * i / 4.0;
      Line(out, px, top + height, px, top + height + 4);
      Text(out, px, top + height + 16, Fmt(fx), "middle", 10);
    }
  }
}

void Header(std::ostream& out, double height) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fmt(kWidth)
      << "\" height=\"" << Fmt(height) << "\" viewBox=\"0 0 " << Fmt(kWidth)
      << ' ' << Fmt(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

int CsvTable::Column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

std::vector<double> CsvTable::Numbers(const std::string& name) const {
  const int col = Column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (col >= static_cast<int>(row.size())) {
      throw std::invalid_argument("short row in column '" + name + "'");
    }
    std::size_t used = 0;
    const double v = std::stod(row[col], &used);
    if (used != row[col].size()) {
      throw std::invalid_argument("bad number '" + row[col] + "'");
    }
    out.push_back(v);
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      table.columns = SplitCsv(line);
      header = false;
    } else {
      table.rows.push_back(SplitCsv(line));
    }
  }
  if (header) throw std::invalid_argument("CSV without a header row");
  return table;
}

void render_line_chart(std::ostream& out, const std::string& x_label,
                       const std::vector<Panel>& panels) {
  const double total =
      kTop + panels.size() * (kPanelHeight + kBottom) + 10.0;
  const double plot_w = kWidth - kLeft - kRight;
  Range xr;
  for (const Panel& p : panels) {
    for (const Series& s : p.series) {
      for (double x : s.x) xr.Add(x);
    }
  }
  xr.Settle();
  Header(out, total);
  double top = kTop;
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const Panel& panel = panels[pi];
    const double height = kPanelHeight;
    Range yr;
    for (const Series& s : panel.series) {
      for (double y : s.y) yr.Add(y);
    }
    yr.Settle();
    Axes(out, top, height, xr, yr, true);
    Text(out, kLeft + plot_w / 2, top - 8, panel.title, "middle", 13);
    out << "<text transform=\"translate(18," << Fmt(top + height / 2)
        << ") rotate(-90)\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << Escape(panel.y_label) << "</text>\n";
    if (pi + 1 == panels.size()) {
      Text(out, kLeft + plot_w / 2, top + height + 36, x_label);
    }
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& s = panel.series[si];
      const char* color = kPalette[si % kPaletteSize];
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.2\" points=\"";
      const std::size_t n = std::min(s.x.size(), s.y.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double px = kLeft + plot_w * (s.x[i] - xr.lo) / (xr.hi - xr.lo);
        const double py =
            top + height - height * (s.y[i] - yr.lo) / (yr.hi - yr.lo);
        out << Fmt(px) << ',' << Fmt(py) << ' ';
      }
      out << "\"/>\n";
      const double ly = top + 14 + 16 * si;
      Line(out, kWidth - kRight + 10, ly - 4, kWidth - kRight + 30, ly - 4,
           color, 2.0);
      Text(out, kWidth - kRight + 34, ly, s.label, "start", 11);
    }
    top += height + kBottom;
  }
  out << "</svg>\n";
}

void render_bar_chart(std::ostream& out, const std::string& title,
                      const std::string& y_label,
                      const std::vector<std::string>& legend,
                      const std::vector<BarGroup>& groups) {
  const double height = kPanelHeight * 1.5;
  const double total = kTop + height + kBottom + 40.0;
  const double plot_w = kWidth - kLeft - kRight;
  Range yr;
  yr.Add(0.0);
  for (const BarGroup& g : groups) {
    for (double v : g.values) yr.Add(v);
  }
  yr.Settle();
  Header(out, total);
  Axes(out, kTop, height, yr, yr, false);
  Text(out, kLeft + plot_w / 2, kTop - 10, title, "middle", 13);
  out << "<text transform=\"translate(18," << Fmt(kTop + height / 2)
      << ") rotate(-90)\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\">"
      << Escape(y_label) << "</text>\n";
  const double group_w = groups.empty() ? plot_w : plot_w / groups.size();
  const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, legend.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const BarGroup& g = groups[gi];
    const double x0 = kLeft + gi * group_w + 0.1 * group_w;
    for (std::size_t vi = 0; vi < g.values.size(); ++vi) {
      const double h = height * (g.values[vi] - yr.lo) / (yr.hi - yr.lo);
      out << "<rect x=\"" << Fmt(x0 + vi * bar_w) << "\" y=\""
          << Fmt(kTop + height - h) << "\" width=\"" << Fmt(bar_w * 0.95)
          << "\" height=\"" << Fmt(h) << "\" fill=\""
          << kPalette[vi % kPaletteSize] << "\"/>\n";
    }
    Text(out, x0 + 0.4 * group_w, kTop + height + 16, g.label, "middle", 9);
  }
  for (std::size_t li = 0; li < legend.size(); ++li) {
    const double ly = kTop + 14 + 16 * li;
    out << "<rect x=\"" << Fmt(kWidth - kRight + 10) << "\" y=\""
        << Fmt(ly - 10) << "\" width=\"14\" height=\"10\" fill=\""
        << kPalette[li % kPaletteSize] << "\"/>\n";
    Text(out, kWidth - kRight + 30, ly, legend[li], "start", 11);
  }
  out << "</svg>\n";
}

void plot_trace(const CsvTable& trace, std::ostream& out) {
  const std::vector<double> t = trace.Numbers("t");
  const auto norm3 = [&](const std::string& prefix) {
    const auto x = trace.Numbers(prefix + "_x");
    const auto y = trace.Numbers(prefix + "_y");
    const auto z = trace.Numbers(prefix + "_z");
    std::vector<double> n(x.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
      n[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    }
    return n;
  };
  std::vector<Panel> panels;
  panels.push_back({"Lateral CoM and ZMP", "y [m]",
                    {{"CoM", t, trace.Numbers("cy")},
                     {"ZMP lipm", t, trace.Numbers("zmp_y")},
                     {"ZMP feet", t, trace.Numbers("zmp_hand_y")}}});
  panels.push_back({"Sagittal CoM and ZMP", "x [m]",
                    {{"CoM", t, trace.Numbers("cx")},
                     {"ZMP lipm", t, trace.Numbers("zmp_x")},
                     {"ZMP feet", t, trace.Numbers("zmp_hand_x")}}});
  panels.push_back({"Hand force", "|f| [N]",
                    {{"commanded", t, norm3("fcmd")},
                     {"realized", t, norm3("freal")}}});
  panels.push_back({"ZMP slack", "[m]",
                    {{"|S|", t, trace.Numbers("slack_norm")}}});
  render_line_chart(out, "t [s]", panels);
}

void plot_maxpush(const CsvTable& maxpush, std::ostream& out) {
  const int variant = maxpush.Column("variant");
  const int phase = maxpush.Column("phase");
  const int hands = maxpush.Column("hands");
  const std::vector<double> impulse = maxpush.Numbers("max_impulse_ns");
  // Groups in first-appearance order of (variant, phase).
  std::vector<BarGroup> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < maxpush.rows.size(); ++i) {
    const auto& row = maxpush.rows[i];
    const std::string key = row.at(variant) + " p" + row.at(phase);
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back({key, {0.0, 0.0}});
    groups[it->second].values[row.at(hands) == "on" ? 1 : 0] = impulse[i];
  }
  render_bar_chart(out, "Maximum recoverable impulse", "impulse [N s]",
                   {"hands off", "hands on"}, groups);
}

}  // namespace hcmpc
