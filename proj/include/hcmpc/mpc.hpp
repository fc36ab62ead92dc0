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

#ifndef HCMPC_MPC_HPP_
#define HCMPC_MPC_HPP_

#include <vector>

#include <Eigen/Core>

#include "hcmpc/contact.hpp"
#include "hcmpc/core_model.hpp"
#include "hcmpc/qp.hpp"
#include "hcmpc/trajectory.hpp"

// First stage of the controller: a receding-horizon QP over CoM jerk,
// upcoming footstep positions and a ZMP slack trajectory S. The conservative
// support polygon is relaxed to Z + S inside [lower, upper]; samples whose S
// is nonzero become the ZMP shift requests handed to contact selection.

namespace hcmpc {

enum class Phase { kLeftSupport, kRightSupport, kDoubleSupport };
enum class Foot { kLeft, kRight };

// Alternating walk-in-place schedule: an initial double support, then single
// support phases (starting on `first_support`) separated by double support.
// With `walking` false the robot stands in double support forever.
struct GaitSchedule {
  double ss_duration = 1.0;
  double ds_duration = 0.1;
  double initial_ds_duration = 1.0;
  Foot first_support = Foot::kLeft;
  bool walking = true;
  int phase_index = 0;
  double elapsed = 0.0;
  // Current foot placements; the swing foot keeps its lift-off position.
  Vec2 left_foot = Vec2(0.0, 0.1);
  Vec2 right_foot = Vec2(0.0, -0.1);

  Phase PhaseOf(int index) const;
  double DurationOf(int index) const;
  // Foot that lands at the end of single-support phase `index`.
  Foot SwingFootOf(int index) const;

  struct Lookup {
    int index = 0;
    Phase phase = Phase::kDoubleSupport;
    // The instant coincides with the start of phase `index`.
    bool boundary = false;
  };
  // Phase active `offset` seconds from now; an instant that falls on a phase
  // boundary belongs to the later phase.
  Lookup At(double offset) const;
  // Phase whose support region constrains the ZMP at `offset`. On a
  // boundary both neighbours apply and the single support one is the
  // tighter of the two, since the double support hull contains it.
  int ConstrainingPhase(double offset) const;
  Phase current() const { return PhaseOf(phase_index); }

  // Advances the clock. Returns true when a single support phase ended
  // during this call, i.e. the swing foot touched down.
  bool Advance(double dt);

  // Throws std::invalid_argument on non-positive durations or feet that are
  // not ordered left of right.
  void Validate() const;
};

// Foot placement constraint n . p <= offset applied to every planned step.
struct HalfPlane {
  Vec2 normal = Vec2::UnitY();
  double offset = 0.0;
};

struct MpcWeights {
  double jerk = 1e-6;
  double velocity = 1.0;
  double zmp = 1.0;
  double slack = 1e4;
  double foot = 1e-2;
};

struct MpcConfig {
  WorldParams world;
  int horizon_steps = 16;
  double dt = 0.1;
  double polygon_scale = 0.1;
  Vec2 foot_half_extents = Vec2(0.11, 0.06);
  // The capture point c + c_dot / omega at the last sample, shifted by the
  // last slack, must lie in the final support region grown to this fraction
  // of the unscaled foot. Without it a diverging CoM satisfies every ZMP row.
  double capture_scale = 1.0;
  MpcWeights weights;
  // Displacement of a landing foot relative to the stance foot.
  double step_x_max = 0.3;
  double step_y_min = 0.12;
  double step_y_max = 0.4;
  double nominal_width = 0.2;
  Vec2 ref_velocity = Vec2::Zero();
  std::vector<HalfPlane> exclusions;
  double slack_eps = 1e-4;
  qp::SolverSettings qp;

  void Validate() const;
};

// Axis-aligned support region [lo, hi].
struct SupportRect {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  Vec2 center() const { return 0.5 * (lo + hi); }
  bool Contains(const Vec2& p, double tol = 0.0) const;
  // Distance from `p` to the rectangle, 0 inside.
  double Distance(const Vec2& p) const;
  Vec2 Clamp(const Vec2& p) const;
};

// Support rectangle for known foot positions with foot rectangles scaled
// by `scale`; double support takes the bounding box of both feet.
SupportRect support_polygon(Phase phase, const Vec2& left, const Vec2& right,
                            const Vec2& half_extents, double scale);

// How the returned solution was obtained.
enum class MpcMode {
  kUnslacked,       // S fixed to zero
  kSlacked,         // S free after the first n_delay samples
  kSlackedNoDelay,  // delay constraint dropped to restore feasibility
  kHold,            // no feasible QP; acceleration is brought to zero
};

struct MpcSolution {
  Eigen::MatrixX2d jerk;       // N x 2
  Eigen::MatrixX2d footsteps;  // M x 2
  std::vector<Foot> footstep_feet;
  Eigen::MatrixX2d slack;      // N x 2
  Eigen::MatrixX2d z_pred;     // N x 2
  std::vector<LipmState> predicted;  // states at samples 1..N
  double slack_norm = 0.0;
  int n_delay = 0;  // delay actually enforced
  MpcMode mode = MpcMode::kUnslacked;
  int qp_iterations = 0;
  double solve_time = 0.0;
};

// Layout of the decision vector:
// [jerk_x(N), jerk_y(N), foot_x(M), foot_y(M), S_x(N), S_y(N)].
struct MpcLayout {
  int N = 0;
  int M = 0;
  int jerk(int axis) const { return axis * N; }
  int foot(int axis) const { return 2 * N + axis * M; }
  int slack(int axis) const { return 2 * N + 2 * M + axis * N; }
  int size() const { return 4 * N + 2 * M; }
};

MpcLayout mpc_layout(const GaitSchedule& gait, const MpcConfig& config);

// QP with S_k = 0 for samples k <= n_delay. Throws qp::MalformedProblem when
// n_delay exceeds the horizon.
qp::QpProblem build_mpc_qp(const LipmState& state, const GaitSchedule& gait,
                           const MpcConfig& config, int n_delay);

// Solves with S fixed to zero first and only admits slack when that problem
// is infeasible, so a feasible unslacked problem always yields S = 0.
MpcSolution solve_mpc(const LipmState& state, const GaitSchedule& gait,
                      const MpcConfig& config, int n_delay);

// Samples with |S_k| > slack_eps, with the requested shift equal to S_k.
DeltaZTrajectory extract_delta_z(const MpcSolution& solution,
                                 double slack_eps);

// Control samples needed for the hand to travel to `contact`, capped at
// `horizon_steps`.
int compute_reach_delay(const Vec3& hand_position, const ContactPoint& contact,
                        double hand_speed, double dt_mpc, int horizon_steps);

}  // namespace hcmpc

#endif  // HCMPC_MPC_HPP_
