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

#include "hcmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hcmpc/random.hpp"

namespace hcmpc {
namespace {

Vec3 Mirror(Vec3 v, Foot side) {
  if (side == Foot::kRight) v.y() = -v.y();
  return v;
}

Vec3 Com3(const LipmState& s, const WorldParams& w) {
  return Vec3(s.c.x(), s.c.y(), w.com_height);
}

Vec3 MoveTowards(const Vec3& from, const Vec3& to, double max_step) {
  const Vec3 d = to - from;
  const double n = d.norm();
  if (n <= max_step) return to;
  return from + (max_step / n) * d;
}

// Nearest integer tick of a time instant.
long TickOf(double t, double dt) { return std::lround(t / dt); }

}  // namespace

void Scenario::Validate() const {
  mpc.Validate();
  gait.Validate();
  if (!(plant_dt > 0.0)) throw std::invalid_argument("plant_dt must be > 0");
  const double ratio = mpc.dt / plant_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1) {
    throw std::invalid_argument(
        "mpc dt must be an integer multiple of plant_dt");
  }
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  if (!initial.IsFinite()) throw std::invalid_argument("non-finite initial");
  for (const Push& p : pushes) {
    if (!(p.duration > 0.0)) {
      throw std::invalid_argument("push duration must be > 0");
    }
    if (!p.impulse.allFinite() || !std::isfinite(p.time)) {
      throw std::invalid_argument("non-finite push");
    }
  }
  if (!(hand.speed > 0.0)) throw std::invalid_argument("hand speed must be > 0");
  if (!(hand.reach_radius > 0.0)) {
    throw std::invalid_argument("reach radius must be > 0");
  }
  if (!(hand.attach_tol >= 0.0 && hand.release_hold >= 0.0)) {
    throw std::invalid_argument("hand tolerances must be >= 0");
  }
  if (!(tracking.time_constant > 0.0 && tracking.noise >= 0.0)) {
    throw std::invalid_argument("invalid force tracking parameters");
  }
  if (!(fall.margin >= 0.0 && fall.window > 0.0 && fall.radius > 0.0)) {
    throw std::invalid_argument("invalid fall parameters");
  }
  for (const ContactPoint& c : contacts) c.Validate();
}

std::vector<ReachableContact> reachable_contacts(const Scenario& scenario,
                                                 const LipmState& state,
                                                 const Vec3& left_hand,
                                                 const Vec3& right_hand) {
  const int N = scenario.mpc.horizon_steps;
  const Vec3 com = Com3(state, scenario.mpc.world);
  std::vector<ReachableContact> out;
  for (const ContactPoint& c : scenario.contacts) {
    std::optional<ReachableContact> best;
    for (Foot side : {Foot::kLeft, Foot::kRight}) {
      const Vec3 shoulder = com + Mirror(scenario.hand.shoulder_offset, side);
      if ((c.position - shoulder).norm() > scenario.hand.reach_radius) continue;
      const Vec3& hand = side == Foot::kLeft ? left_hand : right_hand;
      // One extra step of saturation tells "N" apart from "beyond N".
      const int delay = compute_reach_delay(hand, c, scenario.hand.speed,
                                            scenario.mpc.dt, N + 1);
      if (delay > N) continue;
      if (!best || delay < best->delay) best = ReachableContact{c, delay, side};
    }
    if (best) out.push_back(*best);
  }
  return out;
}

bool detect_fall(const std::vector<Vec2>& required_zmp,
                 const std::vector<SupportRect>& support, const Vec2& com,
                 const FallParams& params, int min_ticks) {
  if (required_zmp.size() != support.size()) {
    throw std::invalid_argument("detect_fall: window size mismatch");
  }
  if (!support.empty() &&
      (com - support.back().center()).norm() > params.radius) {
    return true;
  }
  if (static_cast<int>(required_zmp.size()) < min_ticks || min_ticks <= 0) {
    return false;
  }
  for (size_t i = 0; i < required_zmp.size(); ++i) {
    if (support[i].Distance(required_zmp[i]) <= params.margin) return false;
  }
  return true;
}

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.Validate();
  scenario_.contact.world = scenario_.mpc.world;
  ticks_per_mpc_ =
      static_cast<int>(std::lround(scenario_.mpc.dt / scenario_.plant_dt));
  state_ = scenario_.initial;
  gait_ = scenario_.gait;
  rng_.seed(DeriveSeed(scenario_.seed, 0));
  left_hand_ = Rest(Foot::kLeft);
  right_hand_ = Rest(Foot::kRight);
}

bool Simulator::done() const {
  return summary_.fallen ||
         tick_ >= TickOf(scenario_.duration, scenario_.plant_dt);
}

Vec3 Simulator::Shoulder(Foot side) const {
  return Com3(state_, scenario_.mpc.world) +
         Mirror(scenario_.hand.shoulder_offset, side);
}

Vec3 Simulator::Rest(Foot side) const {
  return Shoulder(side) + Mirror(scenario_.hand.rest_offset, side);
}

Vec2 Simulator::PushAcceleration() const {
  Vec2 a = Vec2::Zero();
  const double dt = scenario_.plant_dt;
  for (const Push& p : scenario_.pushes) {
    const long start = TickOf(p.time, dt);
    const long end = start + std::max(1L, TickOf(p.duration, dt));
    if (tick_ >= start && tick_ < end) {
      // Spread the impulse evenly over the ticks of the push.
      a += p.impulse / (scenario_.mpc.world.mass * (end - start) * dt);
    }
  }
  return a;
}

void Simulator::Replan() {
  const MpcConfig& config = scenario_.mpc;
  std::vector<ReachableContact> reachable;
  int n_delay = 0;
  if (!attached_) {
    reachable = reachable_contacts(scenario_, state_, left_hand_, right_hand_);
    if (!reachable.empty()) {
      n_delay = config.horizon_steps;
      for (const ReachableContact& r : reachable) {
        n_delay = std::min(n_delay, r.delay);
      }
    }
  }
  MpcSolution sol = solve_mpc(state_, gait_, config, n_delay);
  ++summary_.mpc_solves;
  DeltaZTrajectory dz = extract_delta_z(sol, config.slack_eps);

  if (!attached_ && !dz.empty() && !reachable.empty()) {
    // Contacts the hand cannot reach before the first request are skipped.
    std::vector<ContactPoint> candidates;
    std::vector<Foot> sides;
    for (const ReachableContact& r : reachable) {
      if (r.delay < dz.entries.front().step) {
        candidates.push_back(r.contact);
        sides.push_back(r.side);
      }
    }
    std::vector<LipmState> states;
    for (const DeltaZEntry& e : dz.entries) {
      states.push_back(sol.predicted[e.step - 1]);
    }
    bool planned = false;
    try {
      const ContactPlan plan =
          select_contact(dz, states, candidates, scenario_.contact);
      for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].id == *plan.contact_id) {
          target_ = candidates[i];
          target_side_ = sides[i];
          planned = true;
          break;
        }
      }
    } catch (const NoContactFeasible&) {
    }
    if (!planned && sol.n_delay > 0) {
      // No hand can realize the delayed plan: plan as if no hand existed.
      sol = solve_mpc(state_, gait_, config, 0);
      ++summary_.mpc_solves;
      dz = extract_delta_z(sol, config.slack_eps);
    }
  }

  if (sol.mode == MpcMode::kHold) ++summary_.hold_ticks;
  jerk_ = sol.jerk.row(0).transpose();
  slack_norm_ = sol.slack_norm;
  summary_.max_slack_norm = std::max(summary_.max_slack_norm, slack_norm_);

  if (attached_) {
    const Vec2 s1 = sol.slack.row(0).transpose();
    held_delta_z_ = s1.norm() > config.slack_eps ? s1 : Vec2::Zero();
    if (dz.empty()) {
      empty_request_time_ += config.dt;
      if (empty_request_time_ >= scenario_.hand.release_hold - 1e-9) {
        attached_ = false;
        target_.reset();
        held_delta_z_.setZero();
      }
    } else {
      empty_request_time_ = 0.0;
    }
  } else {
    held_delta_z_.setZero();
    if (dz.empty()) target_.reset();
  }
  plan_ = std::move(sol);
}

void Simulator::MoveHands() {
  const double step = scenario_.hand.speed * scenario_.plant_dt;
  for (Foot side : {Foot::kLeft, Foot::kRight}) {
    Vec3& hand = side == Foot::kLeft ? left_hand_ : right_hand_;
    const bool active = target_ && side == target_side_;
    if (active && attached_) continue;
    hand = MoveTowards(hand, active ? target_->position : Rest(side), step);
    if (active && (hand - target_->position).norm() <=
                      scenario_.hand.attach_tol) {
      attached_ = true;
      empty_request_time_ = 0.0;
      force_lag_.setZero();
      ++summary_.attachments;
      summary_.contacts_used.push_back(target_->id);
      if (plan_) {
        const Vec2 s1 = plan_->slack.row(0).transpose();
        held_delta_z_ =
            s1.norm() > scenario_.mpc.slack_eps ? s1 : Vec2::Zero();
      }
    }
  }
}

TickRecord Simulator::Step() {
  if (done()) throw std::logic_error("Simulator::Step after the run ended");
  const double dt = scenario_.plant_dt;
  const WorldParams& world = scenario_.mpc.world;
  if (tick_ % ticks_per_mpc_ == 0) Replan();
  MoveHands();

  TickRecord rec;
  rec.t = time();
  Force3 realized = Force3::Zero();
  Vec3 p = Vec3(0.0, 0.0, world.com_height);
  if (attached_) {
    const InContactForce f =
        in_contact_force(state_, held_delta_z_, *target_, scenario_.contact);
    rec.force_command = f.force;
    const double alpha = 1.0 - std::exp(-dt / scenario_.tracking.time_constant);
    force_lag_ += alpha * (f.force - force_lag_);
    std::uniform_real_distribution<double> noise(-scenario_.tracking.noise,
                                                 scenario_.tracking.noise);
    realized = force_lag_;
    for (int a = 0; a < 3; ++a) realized(a) += noise(rng_);
    p = target_->position;
  } else {
    force_lag_.setZero();
  }
  rec.force_realized = realized;
  summary_.max_force_norm = std::max(summary_.max_force_norm, realized.norm());

  // The feet cannot realize a ZMP outside the true polygon: clamp it and let
  // the CoM acceleration follow.
  const SupportRect support =
      support_polygon(gait_.current(), gait_.left_foot, gait_.right_foot,
                      scenario_.mpc.foot_half_extents, 1.0);
  const Vec2 required = zmp_hand(state_, realized, p, world);
  Vec2 feet = required;
  if (!support.Contains(required)) {
    feet = support.Clamp(required);
    state_.c_ddot = accel_from_zmp(state_.c, feet, realized, p, world);
  }
  const int window = static_cast<int>(
      std::ceil(scenario_.fall.window / dt - 1e-9));
  outside_ticks_ =
      support.Distance(required) > scenario_.fall.margin ? outside_ticks_ + 1
                                                         : 0;
  if (outside_ticks_ >= window ||
      (state_.c - support.center()).norm() > scenario_.fall.radius) {
    summary_.fallen = true;
    summary_.fall_time = rec.t;
  }

  rec.state = state_;
  rec.jerk = jerk_;
  rec.zmp_lipm = zmp_lipm(state_, world);
  rec.zmp_hand = feet;
  rec.support = support;
  rec.slack_norm = slack_norm_;
  rec.delta_z = held_delta_z_;
  rec.contact_id = target_ ? target_->id : -1;
  rec.attached = attached_;
  rec.fallen = summary_.fallen;

  const Vec2 push = PushAcceleration();
  state_ = propagate(state_, jerk_, dt);
  state_.c += 0.5 * dt * dt * push;
  state_.c_dot += dt * push;

  const Foot swing = gait_.SwingFootOf(gait_.phase_index);
  if (gait_.Advance(dt)) {
    Vec2 landing;
    if (plan_ && plan_->footsteps.rows() > 0 &&
        plan_->footstep_feet.front() == swing) {
      landing = plan_->footsteps.row(0).transpose();
    } else {
      const Vec2 stance =
          swing == Foot::kLeft ? gait_.right_foot : gait_.left_foot;
      const double side = swing == Foot::kLeft ? 1.0 : -1.0;
      landing = stance + Vec2(scenario_.mpc.ref_velocity.x() * gait_.ss_duration,
                              side * scenario_.mpc.nominal_width);
    }
    (swing == Foot::kLeft ? gait_.left_foot : gait_.right_foot) = landing;
  }
  ++tick_;
  return rec;
}

void Simulator::RunUntil(double t, std::vector<TickRecord>* trace) {
  const long end = std::min(TickOf(t, scenario_.plant_dt),
                            TickOf(scenario_.duration, scenario_.plant_dt));
  while (!summary_.fallen && tick_ < end) {
    TickRecord rec = Step();
    if (trace) trace->push_back(std::move(rec));
  }
}

}  // namespace hcmpc
