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

#ifndef HCMPC_TRAJECTORY_HPP_
#define HCMPC_TRAJECTORY_HPP_

#include <vector>

#include "hcmpc/core_model.hpp"

namespace hcmpc {

// Requested support-polygon shift at one future MPC sample.
struct DeltaZEntry {
  int step = 0;  // sample index k within the horizon, starting at 1
  Vec2 delta_z = Vec2::Zero();
};

// Ordered by step. Empty means no hand contact is needed.
struct DeltaZTrajectory {
  std::vector<DeltaZEntry> entries;

  bool empty() const { return entries.empty(); }
  int size() const { return static_cast<int>(entries.size()); }
};

}  // namespace hcmpc

#endif  // HCMPC_TRAJECTORY_HPP_
