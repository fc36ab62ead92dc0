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

#ifndef HCMPC_SIM_HPP_
#define HCMPC_SIM_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hcmpc/contact.hpp"
#include "hcmpc/core_model.hpp"
#include "hcmpc/mpc.hpp"

// Closed-loop point-mass testbed: a LIPM plant at the plant rate, the
// footstep MPC at its own rate, hand reaching and contact force tracking.

namespace hcmpc {

struct Push {
  double time = 0.0;               // [s]
  Vec2 impulse = Vec2::Zero();     // [N s]
  double duration = 0.1;           // [s]
};

struct HandParams {
  double speed = 1.0;         // [m/s]
  double reach_radius = 0.75;  // from the shoulder anchor [m]
  double attach_tol = 0.01;   // [m]
  double release_hold = 0.5;  // empty-request time before release [s]
  // Left shoulder relative to the CoM; the right one mirrors y.
  Vec3 shoulder_offset = Vec3(0.0, 0.2, 0.45);
  // Resting hand relative to its shoulder.
  Vec3 rest_offset = Vec3(0.0, 0.05, -0.45);
};

struct ForceTracking {
  double time_constant = 0.05;  // first-order lag [s]
  double noise = 2.0;           // uniform bound per axis [N]
};

struct FallParams {
  double margin = 0.02;  // [m] outside the true support polygon
  double window = 0.3;   // [s]
  double radius = 1.0;   // [m] CoM distance from the support center
};

struct Scenario {
  MpcConfig mpc;
  ContactSettings contact;
  GaitSchedule gait;
  LipmState initial;
  std::vector<ContactPoint> contacts;
  std::vector<Push> pushes;
  HandParams hand;
  ForceTracking tracking;
  FallParams fall;
  double plant_dt = 1e-3;  // [s]
  double duration = 10.0;  // [s]
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on inconsistent parameters.
  void Validate() const;
};

struct TickRecord {
  double t = 0.0;
  LipmState state;
  Vec2 jerk = Vec2::Zero();
  Vec2 zmp_lipm = Vec2::Zero();
  Vec2 zmp_hand = Vec2::Zero();  // realized feet ZMP
  SupportRect support;           // true, unscaled polygon
  double slack_norm = 0.0;
  Vec2 delta_z = Vec2::Zero();  // request held for the hand
  int contact_id = -1;          // target or attached contact, -1 for none
  bool attached = false;
  Force3 force_command = Force3::Zero();
  Force3 force_realized = Force3::Zero();
  bool fallen = false;
};

struct SimSummary {
  bool fallen = false;
  double fall_time = 0.0;
  double max_slack_norm = 0.0;
  int attachments = 0;
  std::vector<int> contacts_used;  // ids in attachment order
  int mpc_solves = 0;
  int hold_ticks = 0;  // MPC ticks that fell back to the hold command
  double max_force_norm = 0.0;
};

struct ReachableContact {
  ContactPoint contact;
  int delay = 0;            // MPC samples until the hand arrives
  Foot side = Foot::kLeft;  // arm that reaches it
};

// Contacts within reach of either shoulder whose reach delay from the hand
// on that side fits in the horizon, in input order. When both arms qualify
// the one with the smaller delay is used, the left one on ties.
std::vector<ReachableContact> reachable_contacts(const Scenario& scenario,
                                                 const LipmState& state,
                                                 const Vec3& left_hand,
                                                 const Vec3& right_hand);

// True when every record of the window has its required ZMP beyond the true
// polygon by more than the margin, or the last record's CoM is farther than
// the radius from the polygon center. Windows shorter than `min_ticks`
// never report a fall.
bool detect_fall(const std::vector<Vec2>& required_zmp,
                 const std::vector<SupportRect>& support, const Vec2& com,
                 const FallParams& params, int min_ticks);

class Simulator {
 public:
  explicit Simulator(Scenario scenario);

  // Advances one plant tick. Returns the record of the new state.
  TickRecord Step();
  // Steps until `t` is reached, the duration ends or the robot falls.
  void RunUntil(double t, std::vector<TickRecord>* trace = nullptr);
  void Run(std::vector<TickRecord>* trace = nullptr) {
    RunUntil(scenario_.duration, trace);
  }

  void AddPush(const Push& push) { scenario_.pushes.push_back(push); }

  double time() const { return tick_ * scenario_.plant_dt; }
  bool fallen() const { return summary_.fallen; }
  bool done() const;
  const SimSummary& summary() const { return summary_; }
  const Scenario& scenario() const { return scenario_; }
  const LipmState& state() const { return state_; }
  const GaitSchedule& gait() const { return gait_; }
  Vec3 hand(Foot side) const {
    return side == Foot::kLeft ? left_hand_ : right_hand_;
  }

 private:
  void Replan();
  Vec3 Shoulder(Foot side) const;
  Vec3 Rest(Foot side) const;
  void MoveHands();
  Vec2 PushAcceleration() const;

  Scenario scenario_;
  int ticks_per_mpc_ = 100;
  long tick_ = 0;
  LipmState state_;
  GaitSchedule gait_;
  Vec2 jerk_ = Vec2::Zero();
  std::optional<MpcSolution> plan_;
  Vec2 held_delta_z_ = Vec2::Zero();
  double slack_norm_ = 0.0;

  Vec3 left_hand_ = Vec3::Zero();
  Vec3 right_hand_ = Vec3::Zero();
  std::optional<ContactPoint> target_;
  Foot target_side_ = Foot::kLeft;
  bool attached_ = false;
  double empty_request_time_ = 0.0;

  Force3 force_lag_ = Force3::Zero();
  std::mt19937_64 rng_;
  int outside_ticks_ = 0;
  SimSummary summary_;
};

}  // namespace hcmpc

#endif  // HCMPC_SIM_HPP_
