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

#include "hcmpc/mpc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>

namespace hcmpc {
namespace {

GaitSchedule Standing() {
  GaitSchedule g;
  g.walking = false;
  return g;
}

// Left single support, halfway through the phase.
GaitSchedule MidLeftSupport() {
  GaitSchedule g;
  g.phase_index = 1;
  g.elapsed = 0.5;
  return g;
}

// Feet at each sample, replayed from the schedule and the planned steps.
struct Feet {
  Phase phase;
  Vec2 left;
  Vec2 right;
  // Polygon of the phase that ended exactly at this sample, if any.
  std::optional<SupportRect> previous;
};

std::vector<Feet> ReplayFeet(const GaitSchedule& gait, const MpcSolution& sol,
                             double dt) {
  std::vector<Feet> out;
  GaitSchedule g = gait;
  int next = 0;
  for (int k = 0; k < sol.jerk.rows(); ++k) {
    const Phase before = g.current();
    const int before_index = g.phase_index;
    const SupportRect before_rect =
        support_polygon(before, g.left_foot, g.right_foot, Vec2(0.11, 0.06),
                        0.1);
    const Foot swing = g.SwingFootOf(g.phase_index);
    const bool landed = g.Advance(dt);
    std::optional<SupportRect> previous;
    if (g.phase_index != before_index && g.elapsed < 1e-9) {
      previous = before_rect;
    }
    if (landed && k + 1 == sol.jerk.rows() && previous) {
      // A landing on the last sample is not planned yet; only the stance
      // polygon constrains that sample.
      out.push_back({before, g.left_foot, g.right_foot, previous});
      break;
    }
    if (landed) {
      EXPECT_NE(before, Phase::kDoubleSupport);
      EXPECT_LT(next, sol.footsteps.rows());
      EXPECT_EQ(sol.footstep_feet[next], swing);
      const Vec2 f = sol.footsteps.row(next++).transpose();
      (swing == Foot::kLeft ? g.left_foot : g.right_foot) = f;
    }
    out.push_back({g.current(), g.left_foot, g.right_foot, previous});
  }
  return out;
}

void ExpectContained(const GaitSchedule& gait, const MpcConfig& config,
                     const MpcSolution& sol) {
  const auto feet = ReplayFeet(gait, sol, config.dt);
  for (int k = 0; k < config.horizon_steps; ++k) {
    const SupportRect rect =
        support_polygon(feet[k].phase, feet[k].left, feet[k].right,
                        config.foot_half_extents, config.polygon_scale);
    const Vec2 z = sol.z_pred.row(k).transpose();
    EXPECT_TRUE(rect.Contains(z, 1e-7)) << "sample " << k + 1 << " z "
                                        << z.transpose();
    if (feet[k].previous) {
      EXPECT_TRUE(feet[k].previous->Contains(z, 1e-7))
          << "boundary sample " << k + 1;
    }
  }
}

// Closed loop on the MPC's own prediction; feet land on the first plan.
void Walk(const MpcConfig& config, double duration, LipmState* s,
          GaitSchedule* g) {
  for (double t = 0.0; t < duration - 1e-9; t += config.dt) {
    const MpcSolution sol = solve_mpc(*s, *g, config, 0);
    ASSERT_EQ(sol.mode, MpcMode::kUnslacked) << "t = " << t;
    ExpectContained(*g, config, sol);
    *s = sol.predicted.front();
    const Foot swing = g->SwingFootOf(g->phase_index);
    if (g->Advance(config.dt)) {
      (swing == Foot::kLeft ? g->left_foot : g->right_foot) =
          sol.footsteps.row(0).transpose();
    }
  }
}

TEST(GaitSchedule, PhaseSequence) {
  GaitSchedule g;
  EXPECT_EQ(g.PhaseOf(0), Phase::kDoubleSupport);
  EXPECT_EQ(g.PhaseOf(1), Phase::kLeftSupport);
  EXPECT_EQ(g.PhaseOf(2), Phase::kDoubleSupport);
  EXPECT_EQ(g.PhaseOf(3), Phase::kRightSupport);
  EXPECT_EQ(g.PhaseOf(5), Phase::kLeftSupport);
  EXPECT_EQ(g.SwingFootOf(1), Foot::kRight);
  EXPECT_EQ(g.SwingFootOf(3), Foot::kLeft);
  g.first_support = Foot::kRight;
  EXPECT_EQ(g.PhaseOf(1), Phase::kRightSupport);
}

TEST(GaitSchedule, BoundarySampleBelongsToNextPhase) {
  GaitSchedule g;
  EXPECT_EQ(g.At(0.5).index, 0);
  EXPECT_EQ(g.At(1.0).index, 1);
  EXPECT_EQ(g.At(2.0).index, 2);
  EXPECT_EQ(g.At(2.1).index, 3);
  EXPECT_FALSE(g.At(0.5).boundary);
  EXPECT_TRUE(g.At(1.0).boundary);
  EXPECT_TRUE(g.At(2.1).boundary);
  EXPECT_FALSE(g.At(2.05).boundary);
}

TEST(GaitSchedule, BoundarySamplesUseSingleSupport) {
  GaitSchedule g;
  EXPECT_EQ(g.ConstrainingPhase(1.0), 1);  // DS -> SS: new support
  EXPECT_EQ(g.ConstrainingPhase(2.0), 1);  // SS -> DS: old support
  EXPECT_EQ(g.ConstrainingPhase(2.05), 2);
  EXPECT_EQ(g.ConstrainingPhase(2.1), 3);
}

TEST(GaitSchedule, AdvanceReportsTouchdown) {
  GaitSchedule g = MidLeftSupport();
  int touchdowns = 0;
  for (int i = 0; i < 500; ++i) touchdowns += g.Advance(1e-3);
  EXPECT_EQ(touchdowns, 1);
  EXPECT_EQ(g.phase_index, 2);
  EXPECT_NEAR(g.elapsed, 0.0, 1e-9);
}

TEST(GaitSchedule, StandingNeverAdvances) {
  GaitSchedule g = Standing();
  for (int i = 0; i < 100; ++i) EXPECT_FALSE(g.Advance(0.1));
  EXPECT_EQ(g.phase_index, 0);
}

TEST(SupportPolygon, DoubleSupportIsBoundingBox) {
  const SupportRect r = support_polygon(Phase::kDoubleSupport, Vec2(0.1, 0.1),
                                        Vec2(0.0, -0.1), Vec2(0.11, 0.06), 0.1);
  EXPECT_NEAR(r.lo.x(), -0.011, 1e-15);
  EXPECT_NEAR(r.hi.x(), 0.111, 1e-15);
  EXPECT_NEAR(r.lo.y(), -0.106, 1e-15);
  EXPECT_NEAR(r.hi.y(), 0.106, 1e-15);
  EXPECT_DOUBLE_EQ(r.Distance(Vec2(0.0, 0.2)), 0.2 - 0.106);
}

TEST(MpcLayout, CountsLandingsInsideHorizon) {
  MpcConfig config;
  EXPECT_EQ(mpc_layout(Standing(), config).M, 0);
  // From t = 0: DS until 1.0, SS until 2.0 (one landing), then DS.
  // The landing at 2.0 affects no sample.
  EXPECT_EQ(mpc_layout(GaitSchedule{}, config).M, 0);
  // Mid left support: lands at 0.5 and 1.6. The last sample sits on the
  // second landing boundary and is still constrained by the stance foot.
  EXPECT_EQ(mpc_layout(MidLeftSupport(), config).M, 1);
  GaitSchedule g = MidLeftSupport();
  g.elapsed = 0.9;
  EXPECT_EQ(mpc_layout(g, config).M, 2);
}

TEST(BuildMpcQp, DecisionVectorAndDelayRows) {
  MpcConfig config;
  const GaitSchedule g = MidLeftSupport();
  const MpcLayout L = mpc_layout(g, config);
  const qp::QpProblem p = build_mpc_qp(LipmState{}, g, config, 4);
  EXPECT_EQ(p.num_variables(), 4 * config.horizon_steps + 2 * L.M);
  for (int a = 0; a < 2; ++a) {
    for (int k = 0; k < config.horizon_steps; ++k) {
      const int i = L.slack(a) + k;
      if (k < 4) {
        EXPECT_EQ(p.lb(i), 0.0);
        EXPECT_EQ(p.ub(i), 0.0);
      } else {
        EXPECT_TRUE(std::isinf(p.lb(i)) && std::isinf(p.ub(i)));
      }
    }
  }
  EXPECT_THROW(build_mpc_qp(LipmState{}, g, config, 17), qp::MalformedProblem);
  EXPECT_THROW(build_mpc_qp(LipmState{}, g, config, -1), qp::MalformedProblem);
}

TEST(SolveMpc, AtRestStaysAtRest) {
  MpcConfig config;
  const MpcSolution sol = solve_mpc(LipmState{}, Standing(), config, 0);
  EXPECT_EQ(sol.mode, MpcMode::kUnslacked);
  EXPECT_LT(sol.jerk.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(sol.slack_norm, 0.0);
  EXPECT_TRUE(extract_delta_z(sol, config.slack_eps).empty());
}

TEST(SolveMpc, ZeroSlackWheneverUnslackedIsFeasible) {
  // A quadratic slack penalty alone may trade a little slack for a better
  // tracking cost; the staged solve returns exactly zero slack instead.
  MpcConfig config;
  LipmState s;
  GaitSchedule g;
  Walk(config, 1.5, &s, &g);
  s.c_dot.y() -= 0.1;
  const MpcSolution sol = solve_mpc(s, g, config, 0);
  ASSERT_EQ(sol.mode, MpcMode::kUnslacked);
  EXPECT_EQ(sol.slack_norm, 0.0);
  const qp::QpSolution relaxed =
      qp::solve(build_mpc_qp(s, g, config, 0), config.qp);
  const qp::QpSolution strict =
      qp::solve(build_mpc_qp(s, g, config, config.horizon_steps), config.qp);
  ASSERT_TRUE(relaxed.optimal() && strict.optimal());
  EXPECT_LE(relaxed.objective, strict.objective + 1e-9);
}

TEST(SolveMpc, LateralPushIsAbsorbedByStepping) {
  MpcConfig config;
  LipmState calm;
  GaitSchedule g;
  Walk(config, 1.5, &calm, &g);
  ASSERT_EQ(g.current(), Phase::kLeftSupport);
  LipmState pushed = calm;
  pushed.c_dot.y() -= 0.1;
  const MpcSolution a = solve_mpc(calm, g, config, 0);
  const MpcSolution b = solve_mpc(pushed, g, config, 0);
  ASSERT_EQ(a.mode, MpcMode::kUnslacked);
  ASSERT_EQ(b.mode, MpcMode::kUnslacked);
  EXPECT_EQ(b.slack_norm, 0.0);
  ASSERT_EQ(b.footstep_feet.front(), Foot::kRight);
  // The right foot lands further out in the push direction.
  EXPECT_LT(b.footsteps(0, 1), a.footsteps(0, 1) - 0.01);
  ExpectContained(g, config, a);
  ExpectContained(g, config, b);
}

MpcConfig BlockedConfig() {
  MpcConfig config;
  // Right foot may not land below y = -0.05.
  config.exclusions.push_back({Vec2(0.0, -1.0), 0.05});
  return config;
}

TEST(SolveMpc, BlockedStepNeedsSlackAfterDelay) {
  const MpcConfig config = BlockedConfig();
  LipmState s;
  s.c = Vec2(0.0, 0.1);
  s.c_dot = Vec2(0.0, -0.8);
  const GaitSchedule g = MidLeftSupport();
  const int n_delay = 3;
  const MpcSolution sol = solve_mpc(s, g, config, n_delay);
  ASSERT_EQ(sol.mode, MpcMode::kSlacked);
  EXPECT_EQ(sol.n_delay, n_delay);
  EXPECT_GT(sol.slack_norm, config.slack_eps);
  for (int k = 0; k < n_delay; ++k) {
    EXPECT_EQ(sol.slack(k, 0), 0.0);
    EXPECT_EQ(sol.slack(k, 1), 0.0);
  }
  // The exclusion is active on the only landing.
  EXPECT_NEAR(sol.footsteps(0, 1), -0.05, 1e-7);
  const DeltaZTrajectory dz = extract_delta_z(sol, config.slack_eps);
  ASSERT_FALSE(dz.empty());
  EXPECT_GT(dz.entries.front().step, n_delay);
  // The requested shift opposes the fall towards -y.
  for (const DeltaZEntry& e : dz.entries) EXPECT_GT(e.delta_z.y(), 0.0);
}

TEST(SolveMpc, DelayRowsExactlyZeroForEveryDelay) {
  const MpcConfig config = BlockedConfig();
  LipmState s;
  s.c = Vec2(0.0, 0.1);
  s.c_dot = Vec2(0.0, -0.6);
  const GaitSchedule g = MidLeftSupport();
  for (int d = 0; d <= config.horizon_steps; ++d) {
    const MpcSolution sol = solve_mpc(s, g, config, d);
    ASSERT_NE(sol.mode, MpcMode::kHold) << d;
    for (int k = 0; k < sol.n_delay; ++k) {
      EXPECT_EQ(sol.slack(k, 0), 0.0);
      EXPECT_EQ(sol.slack(k, 1), 0.0);
    }
    if (sol.mode == MpcMode::kSlacked) {
      EXPECT_EQ(sol.n_delay, d);
    }
  }
}

TEST(SolveMpc, HoldWhenNothingIsFeasible) {
  MpcConfig config;
  // Exclusion incompatible with the kinematic box and no slack available.
  config.exclusions.push_back({Vec2(0.0, -1.0), -0.5});
  LipmState s;
  s.c = Vec2(0.0, 0.1);
  s.c_ddot = Vec2(0.3, 0.0);
  const MpcSolution sol = solve_mpc(s, MidLeftSupport(), config, 2);
  EXPECT_EQ(sol.mode, MpcMode::kHold);
  EXPECT_NEAR(sol.predicted.front().c_ddot.x(), 0.0, 1e-12);
  EXPECT_EQ(sol.slack_norm, 0.0);
}

TEST(SolveMpc, ConservativeContainmentWhileWalking) {
  MpcConfig config;
  config.ref_velocity = Vec2(0.2, 0.0);
  LipmState s;
  GaitSchedule g;
  Walk(config, 6.0, &s, &g);
  EXPECT_GT(s.c.x(), 0.3);
}

LipmState ShiftedStart(const MpcConfig& config, const LipmState& s,
                       double* max_gap) {
  const GaitSchedule g = Standing();
  const MpcSolution first = solve_mpc(s, g, config, 0);
  const MpcSolution second = solve_mpc(first.predicted.front(), g, config, 0);
  *max_gap = 0.0;
  for (int k = 0; k + 1 < config.horizon_steps; ++k) {
    *max_gap = std::max(
        *max_gap, (second.predicted[k].c - first.predicted[k + 1].c).norm());
  }
  return second.predicted.front();
}

TEST(SolveMpc, RecedingHorizonConsistencyAtEquilibrium) {
  MpcConfig config;
  double gap = 1.0;
  const LipmState next = ShiftedStart(config, LipmState{}, &gap);
  EXPECT_LT(gap, 1e-6);
  EXPECT_LT(next.c.norm(), 1e-9);
}

TEST(SolveMpc, RecedingHorizonGapShrinksWithHorizon) {
  // A finite horizon without terminal cost re-plans the tail, so a
  // disturbed standing robot is only approximately consistent.
  LipmState s;
  s.c_dot = Vec2(0.03, -0.02);
  MpcConfig short_horizon;
  MpcConfig long_horizon;
  long_horizon.horizon_steps = 40;
  double gap16 = 0.0;
  double gap40 = 0.0;
  ShiftedStart(short_horizon, s, &gap16);
  ShiftedStart(long_horizon, s, &gap40);
  EXPECT_LT(gap40, 0.5 * gap16);
  EXPECT_LT(gap16, 1e-3);
}

TEST(ExtractDeltaZ, ZeroSlackGivesEmpty) {
  MpcSolution sol;
  sol.slack = Eigen::MatrixX2d::Zero(16, 2);
  EXPECT_TRUE(extract_delta_z(sol, 1e-4).empty());
}

TEST(ExtractDeltaZ, SingleEntry) {
  MpcSolution sol;
  sol.slack = Eigen::MatrixX2d::Zero(16, 2);
  sol.slack(4, 0) = 0.03;
  const DeltaZTrajectory dz = extract_delta_z(sol, 1e-4);
  ASSERT_EQ(dz.size(), 1u);
  EXPECT_EQ(dz.entries[0].step, 5);
  EXPECT_EQ(dz.entries[0].delta_z, Vec2(0.03, 0.0));
}

TEST(ExtractDeltaZ, MixedSignsKeepOrder) {
  MpcSolution sol;
  sol.slack = Eigen::MatrixX2d::Zero(16, 2);
  sol.slack.row(2) << -0.01, 0.02;
  sol.slack.row(7) << 0.0, -0.005;
  sol.slack.row(9) << 5e-5, 0.0;  // below threshold
  sol.slack.row(12) << 0.04, 0.0;
  const DeltaZTrajectory dz = extract_delta_z(sol, 1e-4);
  ASSERT_EQ(dz.size(), 3u);
  EXPECT_EQ(dz.entries[0].step, 3);
  EXPECT_EQ(dz.entries[0].delta_z, Vec2(-0.01, 0.02));
  EXPECT_EQ(dz.entries[1].step, 8);
  EXPECT_EQ(dz.entries[1].delta_z, Vec2(0.0, -0.005));
  EXPECT_EQ(dz.entries[2].step, 13);
}

TEST(ReachDelay, Examples) {
  ContactPoint c = ContactPoint::FromNormal(Vec3(0.5, 0.0, 0.9),
                                            Vec3(-1, 0, 0), 1.0, 200.0, 0);
  EXPECT_EQ(compute_reach_delay(c.position, c, 1.0, 0.1, 16), 0);
  EXPECT_EQ(compute_reach_delay(Vec3(0.0, 0.0, 0.9), c, 1.0, 0.1, 16), 5);
  EXPECT_EQ(compute_reach_delay(Vec3(0.0, 0.0, 0.9), c, 1.0, 0.1, 3), 3);
  EXPECT_EQ(compute_reach_delay(Vec3(-9.5, 0.0, 0.9), c, 1.0, 0.1, 16), 16);
  EXPECT_EQ(compute_reach_delay(Vec3(0.0, 0.0, 0.9), c, 0.7, 0.1, 16), 8);
  EXPECT_THROW(compute_reach_delay(c.position, c, 0.0, 0.1, 16),
               std::invalid_argument);
}

}  // namespace
}  // namespace hcmpc
