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

#ifndef HCMPC_CONTACT_HPP_
#define HCMPC_CONTACT_HPP_

#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hcmpc/core_model.hpp"
#include "hcmpc/qp.hpp"
#include "hcmpc/trajectory.hpp"

// Hand-contact force planning. For a fixed contact the horizontal force is
// an affine function of the vertical force f_z (see force_line), which turns
// the friction-cone problem into a scalar QP (QP1). QP2 additionally lets
// the realized shift deviate from the request by a bounded slack S, with the
// bilinear product S * f_z relaxed by a McCormick envelope in a variable W.

namespace hcmpc {

// Sign with which W enters the slack-augmented force relation. Substituting
// delta_z + S into force_line gives the minus sign; kFlipped flips it.
enum class BilinearSign { kSubstitution, kFlipped };

struct ContactSettings {
  WorldParams world;
  double kappa = 0.1;
  Vec2 s_z_bounds = Vec2(0.02, 0.02);  // box half-widths of S [m]
  double f_z_lower = 0.0;              // [N]
  // Non-finite selects half the body weight.
  double f_z_upper = std::numeric_limits<double>::quiet_NaN();
  BilinearSign sign = BilinearSign::kSubstitution;
  qp::SolverSettings qp;

  double resolved_f_z_upper() const;
};

struct ForceStepProblem {
  LipmState state;
  Vec2 delta_z = Vec2::Zero();
  ContactPoint contact;
  double kappa = 0.1;
  Vec2 s_z_bounds = Vec2(0.02, 0.02);
  double f_z_lower = 0.0;
  double f_z_upper = 0.0;
  BilinearSign sign = BilinearSign::kSubstitution;
  WorldParams world;
  qp::SolverSettings qp;

  static ForceStepProblem Make(const LipmState& state, const Vec2& delta_z,
                               const ContactPoint& contact,
                               const ContactSettings& settings);

  // Throws std::invalid_argument (or a core-model error for the contact)
  // when kappa is outside (0, 1], bounds are crossed, s_z_bounds is negative
  // or f_z_upper reaches the denominator guard.
  void Validate() const;
};

// Cost of a world-frame force at `contact`: squared tangential components
// plus kappa times the squared normal component.
double force_cost(const Force3& force, const ContactPoint& contact,
                  double kappa);

// Largest violation of the linearized friction cone and normal-force limits.
double cone_violation(const Force3& force, const ContactPoint& contact);

struct Qp1Solution {
  double f_z = 0.0;
  Force3 force = Force3::Zero();
  double objective = 0.0;
};

struct Qp2Solution {
  double f_z = 0.0;
  Vec2 s_z = Vec2::Zero();
  Vec2 w = Vec2::Zero();
  Force3 force = Force3::Zero();
  double objective = 0.0;
  // max over axes of |W - S * f_z| / p_z [N].
  double bilinear_violation = 0.0;
  int iterations = 0;
};

// nullopt when no cone-feasible force realizes delta_z exactly.
std::optional<Qp1Solution> solve_qp1(const ForceStepProblem& problem);

// Dense QP over (f_z, S_x, S_y, W_x, W_y).
qp::QpProblem build_qp2(const ForceStepProblem& problem);

// nullopt when the relaxed problem is infeasible.
std::optional<Qp2Solution> solve_qp2(const ForceStepProblem& problem);

// McCormick gap |W - S f_z| / p_z that no feasible QP2 point can exceed.
double bilinear_gap_bound(const ForceStepProblem& problem);

struct StepForce {
  int step = 0;
  Force3 force = Force3::Zero();
  Vec2 realized_shift = Vec2::Zero();  // delta_z + S
  double objective = 0.0;
  double bilinear_violation = 0.0;
};

struct ContactPlan {
  std::optional<int> contact_id;
  std::vector<StepForce> steps;
  double total_objective = 0.0;
  double max_bilinear_violation = 0.0;
  double solve_time = 0.0;  // [s]
};

struct ContactDiagnostic {
  int contact_id = 0;
  int first_infeasible_step = 0;
};

class NoContactFeasible : public std::runtime_error {
 public:
  explicit NoContactFeasible(std::vector<ContactDiagnostic> diagnostics);
  const std::vector<ContactDiagnostic>& diagnostics() const {
    return diagnostics_;
  }

 private:
  std::vector<ContactDiagnostic> diagnostics_;
};

// Exact solution of the one-hot contact selection: every contact is scored
// by the sum of its per-step QP2 objectives and disqualified by any
// infeasible step. Equal totals (within 1e-9) go to the lower id.
// `states[i]` is the predicted state at `delta_z.entries[i].step`.
// Contacts are evaluated concurrently; the result does not depend on the
// number of threads. Throws NoContactFeasible, or std::invalid_argument for
// an empty trajectory or mismatched sizes.
ContactPlan select_contact(const DeltaZTrajectory& delta_z,
                           std::span<const LipmState> states,
                           std::span<const ContactPoint> contacts,
                           const ContactSettings& settings);

// Single-threaded reference of select_contact.
ContactPlan select_contact_serial(const DeltaZTrajectory& delta_z,
                                  std::span<const LipmState> states,
                                  std::span<const ContactPoint> contacts,
                                  const ContactSettings& settings);

struct InContactForce {
  Force3 force = Force3::Zero();
  Vec2 realized_shift = Vec2::Zero();
  // The request was scaled down to the largest feasible fraction.
  bool saturated = false;
  double scale = 1.0;
};

// Hand force for the current sample while attached to `contact`. An
// infeasible request is shrunk along its direction until QP2 is feasible;
// the returned force then lies on the boundary of the feasible set.
InContactForce in_contact_force(const LipmState& state, const Vec2& delta_z,
                                const ContactPoint& contact,
                                const ContactSettings& settings);

}  // namespace hcmpc

#endif  // HCMPC_CONTACT_HPP_
