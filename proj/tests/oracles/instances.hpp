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

#ifndef HCMPC_TESTS_ORACLES_INSTANCES_HPP_
#define HCMPC_TESTS_ORACLES_INSTANCES_HPP_

// Random contact-force instances shared by the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <random>

#include "hcmpc/contact.hpp"
#include "oracles/force_oracle.hpp"

namespace hcmpc::testing {

// Surface frame with outward normal in the half-space facing a robot that
// stands behind the contact (n_x < 0) and a uniformly random tangent angle.
inline Mat3 RandomFacingFrame(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  Vec3 n(g(rng), g(rng), g(rng));
  n.normalize();
  if (n.x() > 0.0) n.x() = -n.x();
  const ContactPoint base =
      ContactPoint::FromNormal(Vec3(0.45, 0, 0.9), n, 1.0, 200.0, 0);
  const double th = angle(rng);
  Mat3 r = base.rotation;
  const Vec3 b = base.rotation.row(0);
  const Vec3 t = base.rotation.row(1);
  r.row(0) = std::cos(th) * b + std::sin(th) * t;
  r.row(1) = -std::sin(th) * b + std::cos(th) * t;
  return r;
}

inline ForceInstance RandomInstance(std::mt19937_64& rng,
                                    double dz_range = 0.05) {
  std::uniform_real_distribution<double> acc(-2.0, 2.0);
  std::uniform_real_distribution<double> dz(-dz_range, dz_range);
  std::uniform_real_distribution<double> mu(0.1, 1.0);
  ForceInstance in;
  in.state.c_ddot = Vec2(acc(rng), acc(rng));
  in.delta_z = Vec2(dz(rng), dz(rng));
  in.rotation = RandomFacingFrame(rng);
  in.mu = mu(rng);
  return in;
}

inline ContactPoint ToContact(const ForceInstance& in, int id = 0) {
  ContactPoint c;
  c.position = in.p;
  c.rotation = in.rotation;
  c.mu = in.mu;
  c.f_n_max = in.f_n_max;
  c.id = id;
  return c;
}

inline ContactSettings ToSettings(const ForceInstance& in) {
  ContactSettings s;
  s.world = in.world;
  s.kappa = in.kappa;
  s.s_z_bounds = Vec2(in.s_bound, in.s_bound);
  s.f_z_lower = in.f_lo;
  s.f_z_upper = in.f_hi;
  s.sign = in.sigma < 0 ? BilinearSign::kSubstitution : BilinearSign::kFlipped;
  return s;
}

inline ForceStepProblem ToProblem(const ForceInstance& in) {
  return ForceStepProblem::Make(in.state, in.delta_z, ToContact(in),
                                ToSettings(in));
}

}  // namespace hcmpc::testing

#endif  // HCMPC_TESTS_ORACLES_INSTANCES_HPP_
