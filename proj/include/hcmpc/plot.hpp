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

#ifndef HCMPC_PLOT_HPP_
#define HCMPC_PLOT_HPP_

#include <istream>
#include <ostream>
#include <string>
#include <vector>

// Static SVG charts rendered from the CSV files written by the experiments.

namespace hcmpc {

// Comma-separated table with a header row. Lines starting with '#' are
// skipped. Fields are kept as text.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Index of `name`; throws std::out_of_range when absent.
  int Column(const std::string& name) const;
  // Column converted to numbers; throws std::invalid_argument on bad cells.
  std::vector<double> Numbers(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Series> series;
};

// Panels stacked vertically over a shared x axis.
void render_line_chart(std::ostream& out, const std::string& x_label,
                       const std::vector<Panel>& panels);

struct BarGroup {
  std::string label;
  std::vector<double> values;  // one per legend entry
};

void render_bar_chart(std::ostream& out, const std::string& title,
                      const std::string& y_label,
                      const std::vector<std::string>& legend,
                      const std::vector<BarGroup>& groups);

// Lateral CoM and ZMP, sagittal CoM and ZMP, commanded and realized hand
// force magnitude against time.
void plot_trace(const CsvTable& trace, std::ostream& out);
// Maximum impulse per variant and push phase, with and without hands.
void plot_maxpush(const CsvTable& maxpush, std::ostream& out);

}  // namespace hcmpc

#endif  // HCMPC_PLOT_HPP_
