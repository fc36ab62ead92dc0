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

#ifndef HCMPC_CONFIG_HPP_
#define HCMPC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcmpc/sim.hpp"

// Experiment configuration files: `key = value` lines grouped by `[section]`
// headers, with repeatable `[[contact]]`, `[[push]]` and `[[exclusion]]`
// tables. Values are numbers, booleans, double-quoted strings or flat arrays
// of numbers. `#` starts a comment.

namespace hcmpc {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// A wall parallel to the x axis at `y`, facing the robot. It contributes a
// grid of hand contacts and a footstep standoff half-plane.
struct WallSpec {
  double y = 0.45;
  double standoff = 0.35;
  std::vector<double> xs{-0.2, -0.1, 0.0, 0.1, 0.2};
  std::vector<double> zs{0.9, 1.1, 1.3};
  double mu = 1.0;
  double f_n_max = 200.0;
};

// Appends the wall's contacts (ids continue after the existing ones) and
// its standoff exclusion to the scenario.
void add_wall(const WallSpec& wall, Scenario* scenario);

struct SweepConfig {
  std::int64_t samples = 100000;
  std::vector<double> mu_values{0.1, 0.4, 0.7, 1.0};
  int dz_points = 10;       // per axis, evenly spaced over +-dz_range
  double dz_range = 0.05;   // [m]
  double accel_range = 2.0;  // [m/s^2] per axis
  Vec3 contact_position = Vec3(0.45, 0.0, 0.9);
  double f_n_max = 200.0;

  std::int64_t grid_size() const {
    return static_cast<std::int64_t>(mu_values.size()) * dz_points * dz_points;
  }
};

struct BenchConfig {
  std::vector<int> horizons{4, 8, 16};
  std::vector<int> contact_counts{5, 10, 20, 40};
  int repetitions = 50;
  int in_contact_repetitions = 2000;
};

struct MaxPushConfig {
  std::vector<double> wall_y{0.45, 0.70, 0.95};
  std::vector<std::string> variant_names{"zero-step", "one-step", "two-step"};
  int phases = 5;
  double cycle_start = 3.1;  // [s], start of a double support phase
  double push_duration = 0.1;
  double push_direction_y = 1.0;  // sign of the lateral push
  double recovery_time = 4.0;  // [s] after the push
  double resolution = 0.25;    // [N s]
  double max_impulse = 60.0;   // [N s]
};

struct ExperimentConfig {
  Scenario scenario;
  std::optional<WallSpec> wall;
  SweepConfig sweep;
  BenchConfig bench;
  MaxPushConfig maxpush;
};

// Throws ConfigError with the offending line for syntax errors, unknown
// sections or keys, wrong value types and missing required keys.
ExperimentConfig parse_config(std::string_view text,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Scenario with the wall applied, ready to simulate.
Scenario build_scenario(const ExperimentConfig& config);

}  // namespace hcmpc

#endif  // HCMPC_CONFIG_HPP_
