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

#ifndef HCMPC_CORE_MODEL_HPP_
#define HCMPC_CORE_MODEL_HPP_

#include <stdexcept>

#include <Eigen/Core>

// Linear inverted pendulum dynamics and the ZMP algebra for a point mass
// that receives an additional force through a hand contact.
//
// World frame: z points up (antiparallel to gravity), the ground plane is
// z = 0. Two-vectors are (x, y) pairs and forces are expressed in the world
// frame unless stated otherwise.

namespace hcmpc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// World-frame contact force [N].
using Force3 = Eigen::Vector3d;

// Relative guard on m*g - f_z, see DenominatorGuard().
inline constexpr double kDenominatorGuardRatio = 1e-6;
// Contacts closer than this to the ground are rejected [m].
inline constexpr double kMinContactHeight = 0.05;

class DegenerateDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateContactHeight : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct WorldParams {
  double mass = 62.5;        // [kg]
  double gravity = 9.81;     // [m/s^2]
  double com_height = 0.78;  // [m], constant
  double dt = 0.1;           // control timestep [s]

  double weight() const { return mass * gravity; }
  // Throws std::invalid_argument unless every field is strictly positive.
  void Validate() const;
};

// Horizontal CoM state. The vertical component is fixed by WorldParams.
struct LipmState {
  Vec2 c = Vec2::Zero();
  Vec2 c_dot = Vec2::Zero();
  Vec2 c_ddot = Vec2::Zero();

  bool IsFinite() const;
  friend bool operator==(const LipmState&, const LipmState&) = default;
};

// Candidate hand contact. `rotation` maps a world-frame force onto the
// surface frame (b, t, n); its last row is the outward surface normal.
struct ContactPoint {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double mu = 1.0;
  double f_n_max = 200.0;
  int id = 0;

  Vec3 normal() const { return rotation.row(2).transpose(); }

  // Builds the surface frame from an outward normal. The binormal axis is
  // the component of `tangent_hint` orthogonal to the normal (a default is
  // picked when the hint is parallel to it).
  static ContactPoint FromNormal(const Vec3& position, const Vec3& normal,
                                 double mu, double f_n_max, int id,
                                 const Vec3& tangent_hint = Vec3::UnitZ());

  // Throws std::invalid_argument on a non-orthonormal rotation or negative
  // friction/force limits, DegenerateContactHeight when too close to the
  // ground.
  void Validate() const;
};

// Exact one-step discretization of the per-axis triple integrator driven by a
// constant jerk over `dt`.
LipmState propagate(const LipmState& state, const Vec2& jerk, double dt);
inline LipmState propagate(const LipmState& state, const Vec2& jerk,
                           const WorldParams& params) {
  return propagate(state, jerk, params.dt);
}

// ZMP of the plain LIPM: c - (c_z / g) * c_ddot.
Vec2 zmp_lipm(const LipmState& state, const WorldParams& params);

// ZMP of the feet when a hand force `f_c` acts at `p`.
Vec2 zmp_hand(const LipmState& state, const Force3& f_c, const Vec3& p,
              const WorldParams& params);

// Shift of the ZMP produced by the hand force, zmp_hand - zmp_lipm, evaluated
// in closed form.
Vec2 delta_z(const LipmState& state, const Force3& f_c, const Vec3& p,
             const WorldParams& params);

// Horizontal hand force that produces the shift `delta_z` for a chosen
// vertical force `f_z`. The solutions form a line parametrized by f_z.
Vec2 force_line(const LipmState& state, const Vec3& p, const Vec2& delta_z,
                double f_z, const WorldParams& params);

// Coefficients of force_line: f_xy = slope * f_z + offset.
struct ForceLine {
  Vec2 slope;
  Vec2 offset;
};
ForceLine force_line_coefficients(const LipmState& state, const Vec3& p,
                                  const Vec2& delta_z,
                                  const WorldParams& params);

// Inverse of zmp_hand with respect to the CoM acceleration: the horizontal
// acceleration obtained when the feet realize `zmp` while the hand applies
// `f_c` at `p`.
Vec2 accel_from_zmp(const Vec2& c, const Vec2& zmp, const Force3& f_c,
                    const Vec3& p, const WorldParams& params);

// Smallest admissible value of m*g - f_z.
inline double DenominatorGuard(const WorldParams& params) {
  return kDenominatorGuardRatio * params.weight();
}

}  // namespace hcmpc

#endif  // HCMPC_CORE_MODEL_HPP_
