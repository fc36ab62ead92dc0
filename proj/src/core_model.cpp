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

#include "hcmpc/core_model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace hcmpc {
namespace {

double CheckedDenominator(double f_z, const WorldParams& params) {
  const double den = params.weight() - f_z;
  if (!(den > DenominatorGuard(params))) {
    throw DegenerateDenominator("m*g - f_z = " + std::to_string(den) +
                                " is below the singularity guard");
  }
  return den;
}

}  // namespace

void WorldParams::Validate() const {
  if (!(mass > 0) || !(gravity > 0) || !(com_height > 0) || !(dt > 0)) {
    throw std::invalid_argument(
        "world parameters mass, gravity, com_height and dt must be positive");
  }
}

bool LipmState::IsFinite() const {
  return c.allFinite() && c_dot.allFinite() && c_ddot.allFinite();
}

ContactPoint ContactPoint::FromNormal(const Vec3& position, const Vec3& normal,
                                      double mu, double f_n_max, int id,
                                      const Vec3& tangent_hint) {
  const Vec3 n = normal.normalized();
  Vec3 b = tangent_hint - tangent_hint.dot(n) * n;
  if (b.norm() < 1e-6) {
    const Vec3 alt = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    b = alt - alt.dot(n) * n;
  }
  b.normalize();
  const Vec3 t = n.cross(b);
  ContactPoint cp;
  cp.position = position;
  cp.rotation.row(0) = b.transpose();
  cp.rotation.row(1) = t.transpose();
  cp.rotation.row(2) = n.transpose();
  cp.mu = mu;
  cp.f_n_max = f_n_max;
  cp.id = id;
  return cp;
}

void ContactPoint::Validate() const {
  if (!position.allFinite() || !rotation.allFinite()) {
    throw std::invalid_argument("contact " + std::to_string(id) +
                                ": non-finite position or rotation");
  }
  const double orth_err =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (orth_err > 1e-9) {
    throw std::invalid_argument("contact " + std::to_string(id) +
                                ": rotation is not orthonormal");
  }
  if (!(mu >= 0) || !(f_n_max >= 0)) {
    throw std::invalid_argument("contact " + std::to_string(id) +
                                ": mu and f_n_max must be non-negative");
  }
  if (std::abs(position.z()) < kMinContactHeight) {
    throw DegenerateContactHeight("contact " + std::to_string(id) +
                                  " lies too close to the ground plane");
  }
}

LipmState propagate(const LipmState& state, const Vec2& jerk, double dt) {
  const double dt2 = dt * dt / 2.0;
  const double dt3 = dt * dt * dt / 6.0;
  LipmState next;
  next.c = state.c + dt * state.c_dot + dt2 * state.c_ddot + dt3 * jerk;
  next.c_dot = state.c_dot + dt * state.c_ddot + dt2 * jerk;
  next.c_ddot = state.c_ddot + dt * jerk;
  return next;
}

Vec2 zmp_lipm(const LipmState& state, const WorldParams& params) {
  return state.c - (params.com_height / params.gravity) * state.c_ddot;
}

Vec2 zmp_hand(const LipmState& state, const Force3& f_c, const Vec3& p,
              const WorldParams& params) {
  const double den = CheckedDenominator(f_c.z(), params);
  const double m = params.mass;
  const Vec2 num = m * params.com_height * state.c_ddot -
                   params.weight() * state.c - p.z() * f_c.head<2>() +
                   p.head<2>() * f_c.z();
  return -num / den;
}

Vec2 delta_z(const LipmState& state, const Force3& f_c, const Vec3& p,
             const WorldParams& params) {
  const double den = CheckedDenominator(f_c.z(), params);
  const Vec2 lever = -p.head<2>() -
                     (params.com_height / params.gravity) * state.c_ddot +
                     state.c;
  return (p.z() / den) * f_c.head<2>() + (f_c.z() / den) * lever;
}

ForceLine force_line_coefficients(const LipmState& state, const Vec3& p,
                                  const Vec2& delta_z,
                                  const WorldParams& params) {
  if (std::abs(p.z()) < kMinContactHeight) {
    throw DegenerateContactHeight("contact height " + std::to_string(p.z()) +
                                  " m is below the admissible minimum");
  }
  ForceLine line;
  line.slope = (p.head<2>() +
                (params.com_height / params.gravity) * state.c_ddot -
                state.c - delta_z) /
               p.z();
  line.offset = params.weight() * delta_z / p.z();
  return line;
}

Vec2 force_line(const LipmState& state, const Vec3& p, const Vec2& delta_z,
                double f_z, const WorldParams& params) {
  const ForceLine line = force_line_coefficients(state, p, delta_z, params);
  return line.slope * f_z + line.offset;
}

Vec2 accel_from_zmp(const Vec2& c, const Vec2& zmp, const Force3& f_c,
                    const Vec3& p, const WorldParams& params) {
  const double den = CheckedDenominator(f_c.z(), params);
  const Vec2 num = params.weight() * c + p.z() * f_c.head<2>() -
                   p.head<2>() * f_c.z() - zmp * den;
  return num / (params.mass * params.com_height);
}

}  // namespace hcmpc
