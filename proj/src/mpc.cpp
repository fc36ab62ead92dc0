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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hcmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Samples closer than this to a phase boundary belong to the later phase.
constexpr double kBoundaryEps = 1e-6;

// Sample-to-state maps of the triple integrator for one axis:
// c_k = Pps x0 + Ppu j, likewise for velocity, acceleration and ZMP.
struct Prediction {
  MatrixXd Pps, Ppu, Pvs, Pvu, Pas, Pau, Pzs, Pzu;
};

Prediction BuildPrediction(int N, double dt, double height_over_g) {
  Eigen::Matrix3d A;
  A << 1, dt, dt * dt / 2, 0, 1, dt, 0, 0, 1;
  const Eigen::Vector3d B(dt * dt * dt / 6, dt * dt / 2, dt);
  Prediction p;
  for (MatrixXd* m : {&p.Pps, &p.Pvs, &p.Pas}) m->setZero(N, 3);
  for (MatrixXd* m : {&p.Ppu, &p.Pvu, &p.Pau}) m->setZero(N, N);
  // powers[i] = A^i B
  std::vector<Eigen::Vector3d> powers(N);
  Eigen::Matrix3d Ak = Eigen::Matrix3d::Identity();
  for (int i = 0; i < N; ++i) {
    powers[i] = Ak * B;
    Ak = A * Ak;
  }
  Ak = Eigen::Matrix3d::Identity();
  for (int k = 0; k < N; ++k) {
    Ak = A * Ak;  // A^(k+1)
    p.Pps.row(k) = Ak.row(0);
    p.Pvs.row(k) = Ak.row(1);
    p.Pas.row(k) = Ak.row(2);
    for (int i = 0; i <= k; ++i) {
      const Eigen::Vector3d& col = powers[k - i];
      p.Ppu(k, i) = col(0);
      p.Pvu(k, i) = col(1);
      p.Pau(k, i) = col(2);
    }
  }
  p.Pzs = p.Pps - height_over_g * p.Pas;
  p.Pzu = p.Ppu - height_over_g * p.Pau;
  return p;
}

// A foot position that is either known or a planned footstep variable.
struct FootRef {
  int var = -1;
  Vec2 known = Vec2::Zero();
};

struct Landing {
  int phase = 0;  // single-support phase whose end places the foot
  Foot foot = Foot::kLeft;
  FootRef stance;  // support foot during that phase
};

struct SampleSupport {
  Phase phase = Phase::kDoubleSupport;
  FootRef left;
  FootRef right;
};

struct GaitPlan {
  std::vector<Landing> landings;
  std::vector<SampleSupport> samples;
};

GaitPlan PlanGait(const GaitSchedule& gait, int N, double dt) {
  GaitPlan plan;
  std::vector<int> sample_phase(N);
  int last = gait.phase_index;
  for (int k = 0; k < N; ++k) {
    sample_phase[k] = gait.ConstrainingPhase((k + 1) * dt);
    last = std::max(last, sample_phase[k]);
  }
  FootRef left{-1, gait.left_foot};
  FootRef right{-1, gait.right_foot};
  // Foot references valid during each phase index in [phase_index, last].
  std::vector<FootRef> left_at, right_at;
  for (int i = gait.phase_index; i <= last; ++i) {
    left_at.push_back(left);
    right_at.push_back(right);
    if (gait.walking && gait.PhaseOf(i) != Phase::kDoubleSupport && i < last) {
      Landing l;
      l.phase = i;
      l.foot = gait.SwingFootOf(i);
      l.stance = l.foot == Foot::kLeft ? right : left;
      const FootRef placed{static_cast<int>(plan.landings.size()), Vec2::Zero()};
      plan.landings.push_back(l);
      (l.foot == Foot::kLeft ? left : right) = placed;
    }
  }
  for (int k = 0; k < N; ++k) {
    const int rel = sample_phase[k] - gait.phase_index;
    plan.samples.push_back(
        {gait.PhaseOf(sample_phase[k]), left_at[rel], right_at[rel]});
  }
  return plan;
}

// Affine expression in the footstep variables of one axis.
struct FootExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;
};

FootExpr Ref(const FootRef& f, int axis, double scale = 1.0) {
  FootExpr e;
  if (f.var >= 0) {
    e.terms.push_back({f.var, scale});
  } else {
    e.constant = scale * f.known(axis);
  }
  return e;
}

FootExpr Sum(const FootExpr& a, const FootExpr& b) {
  FootExpr e = a;
  e.constant += b.constant;
  e.terms.insert(e.terms.end(), b.terms.begin(), b.terms.end());
  return e;
}

FootExpr Center(const SampleSupport& s, int axis) {
  switch (s.phase) {
    case Phase::kLeftSupport:
      return Ref(s.left, axis);
    case Phase::kRightSupport:
      return Ref(s.right, axis);
    case Phase::kDoubleSupport:
      break;
  }
  return Sum(Ref(s.left, axis, 0.5), Ref(s.right, axis, 0.5));
}

// Accumulates weight * (g . v - target)^2 into 1/2 v'Hv + q'v.
void AddSquare(const RowVectorXd& g, double target, double weight,
               MatrixXd* H, VectorXd* q) {
  if (weight == 0.0) return;
  H->noalias() += 2.0 * weight * g.transpose() * g;
  *q -= 2.0 * weight * target * g.transpose();
}

struct RowBuilder {
  std::vector<RowVectorXd> rows;
  std::vector<double> lower, upper;

  void Add(const RowVectorXd& row, double lo, double hi) {
    rows.push_back(row);
    lower.push_back(lo);
    upper.push_back(hi);
  }
};

// Rows keeping `row . v + constant` inside the support region of `s` along
// `axis`, grown by `half` on each side.
void AddSupportRows(const RowVectorXd& row, double constant,
                    const SampleSupport& s, int axis, double half,
                    const MpcLayout& L, RowBuilder* rows) {
  auto bounded = [&](const FootExpr& ref, double lo, double hi) {
    RowVectorXd r = row;
    for (const auto& [var, coef] : ref.terms) r(L.foot(axis) + var) -= coef;
    rows->Add(r, lo + ref.constant - constant, hi + ref.constant - constant);
  };
  if (s.phase != Phase::kDoubleSupport) {
    bounded(Center(s, axis), -half, half);
  } else if (axis == 1) {
    // Feet are ordered in y, so the hull spans right - half to left + half.
    bounded(Ref(s.right, axis), -half, qp::kInf);
    bounded(Ref(s.left, axis), -qp::kInf, half);
  } else if (s.left.var < 0 && s.right.var < 0) {
    const double lo = std::min(s.left.known(axis), s.right.known(axis)) - half;
    const double hi = std::max(s.left.known(axis), s.right.known(axis)) + half;
    bounded(FootExpr{}, lo, hi);
  } else {
    bounded(Center(s, axis), -half, half);
  }
}

Vec2 NominalOffset(const MpcConfig& config, const GaitSchedule& gait,
                   Foot foot) {
  const double side = foot == Foot::kLeft ? 1.0 : -1.0;
  return Vec2(config.ref_velocity.x() * gait.ss_duration,
              side * config.nominal_width +
                  config.ref_velocity.y() * gait.ss_duration);
}

void CheckDelay(const MpcConfig& config, int n_delay) {
  if (n_delay < 0 || n_delay > config.horizon_steps) {
    throw qp::MalformedProblem("n_delay must lie in [0, N], got " +
                               std::to_string(n_delay));
  }
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

void FillPredictions(const LipmState& state, const MpcConfig& config,
                     const Prediction& pred, MpcSolution* sol) {
  const int N = config.horizon_steps;
  sol->z_pred.resize(N, 2);
  sol->predicted.assign(N, LipmState{});
  for (int a = 0; a < 2; ++a) {
    const Eigen::Vector3d x0(state.c(a), state.c_dot(a), state.c_ddot(a));
    const VectorXd j = sol->jerk.col(a);
    const VectorXd c = pred.Pps * x0 + pred.Ppu * j;
    const VectorXd v = pred.Pvs * x0 + pred.Pvu * j;
    const VectorXd acc = pred.Pas * x0 + pred.Pau * j;
    sol->z_pred.col(a) = pred.Pzs * x0 + pred.Pzu * j;
    for (int k = 0; k < N; ++k) {
      sol->predicted[k].c(a) = c(k);
      sol->predicted[k].c_dot(a) = v(k);
      sol->predicted[k].c_ddot(a) = acc(k);
    }
  }
}

}  // namespace

Phase GaitSchedule::PhaseOf(int index) const {
  if (!walking || index % 2 == 0) return Phase::kDoubleSupport;
  const bool first = ((index - 1) / 2) % 2 == 0;
  const Foot support =
      first ? first_support
            : (first_support == Foot::kLeft ? Foot::kRight : Foot::kLeft);
  return support == Foot::kLeft ? Phase::kLeftSupport : Phase::kRightSupport;
}

double GaitSchedule::DurationOf(int index) const {
  if (!walking) return std::numeric_limits<double>::infinity();
  if (index == 0) return initial_ds_duration;
  return index % 2 == 1 ? ss_duration : ds_duration;
}

Foot GaitSchedule::SwingFootOf(int index) const {
  return PhaseOf(index) == Phase::kLeftSupport ? Foot::kRight : Foot::kLeft;
}

GaitSchedule::Lookup GaitSchedule::At(double offset) const {
  int index = phase_index;
  double remaining = DurationOf(index) - elapsed;
  bool boundary = std::abs(offset) <= kBoundaryEps && elapsed <= kBoundaryEps;
  while (offset >= remaining - kBoundaryEps) {
    offset -= remaining;
    ++index;
    remaining = DurationOf(index);
    boundary = true;
  }
  boundary = boundary && std::abs(offset) <= kBoundaryEps;
  return {index, PhaseOf(index), boundary};
}

int GaitSchedule::ConstrainingPhase(double offset) const {
  const Lookup l = At(offset);
  if (l.boundary && l.phase == Phase::kDoubleSupport && l.index > 0) {
    return l.index - 1;
  }
  return l.index;
}

bool GaitSchedule::Advance(double dt) {
  bool landed = false;
  elapsed += dt;
  while (elapsed >= DurationOf(phase_index) - kBoundaryEps) {
    elapsed -= DurationOf(phase_index);
    if (PhaseOf(phase_index) != Phase::kDoubleSupport) landed = true;
    ++phase_index;
  }
  elapsed = std::max(elapsed, 0.0);
  return landed;
}

void GaitSchedule::Validate() const {
  if (!(ss_duration > 0.0 && ds_duration > 0.0 && initial_ds_duration > 0.0)) {
    throw std::invalid_argument("gait durations must be positive");
  }
  if (!(left_foot.y() > right_foot.y())) {
    throw std::invalid_argument("left foot must lie at larger y than right");
  }
}

void MpcConfig::Validate() const {
  world.Validate();
  if (horizon_steps < 1) throw std::invalid_argument("horizon_steps < 1");
  if (!(dt > 0.0)) throw std::invalid_argument("mpc dt must be positive");
  if (!(capture_scale > 0.0)) {
    throw std::invalid_argument("capture_scale must be positive");
  }
  if (!(polygon_scale > 0.0 && polygon_scale <= 1.0)) {
    throw std::invalid_argument("polygon_scale must lie in (0, 1]");
  }
  if (weights.jerk < 0 || weights.velocity < 0 || weights.zmp < 0 ||
      weights.foot < 0 || !(weights.slack > 0)) {
    throw std::invalid_argument("weights must be >= 0 with slack > 0");
  }
  if (!(step_y_min <= step_y_max && step_x_max >= 0.0)) {
    throw std::invalid_argument("invalid kinematic step box");
  }
}

bool SupportRect::Contains(const Vec2& p, double tol) const {
  return (p.array() >= lo.array() - tol).all() &&
         (p.array() <= hi.array() + tol).all();
}

double SupportRect::Distance(const Vec2& p) const {
  return (p - Clamp(p)).norm();
}

Vec2 SupportRect::Clamp(const Vec2& p) const {
  return p.cwiseMax(lo).cwiseMin(hi);
}

SupportRect support_polygon(Phase phase, const Vec2& left, const Vec2& right,
                            const Vec2& half_extents, double scale) {
  const Vec2 h = scale * half_extents;
  switch (phase) {
    case Phase::kLeftSupport:
      return {left - h, left + h};
    case Phase::kRightSupport:
      return {right - h, right + h};
    case Phase::kDoubleSupport:
      break;
  }
  return {left.cwiseMin(right) - h, left.cwiseMax(right) + h};
}

MpcLayout mpc_layout(const GaitSchedule& gait, const MpcConfig& config) {
  const GaitPlan plan = PlanGait(gait, config.horizon_steps, config.dt);
  return {config.horizon_steps, static_cast<int>(plan.landings.size())};
}

qp::QpProblem build_mpc_qp(const LipmState& state, const GaitSchedule& gait,
                           const MpcConfig& config, int n_delay) {
  config.Validate();
  CheckDelay(config, n_delay);
  if (!state.IsFinite()) throw qp::MalformedProblem("non-finite MPC state");
  const int N = config.horizon_steps;
  const GaitPlan plan = PlanGait(gait, N, config.dt);
  const MpcLayout L{N, static_cast<int>(plan.landings.size())};
  const int nv = L.size();
  const Prediction pred = BuildPrediction(
      N, config.dt, config.world.com_height / config.world.gravity);
  const Vec2 h = config.polygon_scale * config.foot_half_extents;
  const MpcWeights& w = config.weights;
  const double omega = std::sqrt(config.world.gravity / config.world.com_height);

  MatrixXd H = MatrixXd::Zero(nv, nv);
  VectorXd q = VectorXd::Zero(nv);
  RowBuilder rows;

  for (int a = 0; a < 2; ++a) {
    const Eigen::Vector3d x0(state.c(a), state.c_dot(a), state.c_ddot(a));
    const VectorXd z0 = pred.Pzs * x0;
    const VectorXd v0 = pred.Pvs * x0;
    for (int k = 0; k < N; ++k) {
      RowVectorXd zrow = RowVectorXd::Zero(nv);
      zrow.segment(L.jerk(a), N) = pred.Pzu.row(k);

      // Jerk, velocity tracking and slack costs.
      RowVectorXd e = RowVectorXd::Zero(nv);
      e(L.jerk(a) + k) = 1.0;
      AddSquare(e, 0.0, w.jerk, &H, &q);
      RowVectorXd vrow = RowVectorXd::Zero(nv);
      vrow.segment(L.jerk(a), N) = pred.Pvu.row(k);
      AddSquare(vrow, config.ref_velocity(a) - v0(k), w.velocity, &H, &q);
      e.setZero();
      e(L.slack(a) + k) = 1.0;
      AddSquare(e, 0.0, w.slack, &H, &q);

      // ZMP towards the support center.
      const SampleSupport& s = plan.samples[k];
      const FootExpr center = Center(s, a);
      RowVectorXd crow = zrow;
      for (const auto& [var, coef] : center.terms) crow(L.foot(a) + var) -= coef;
      AddSquare(crow, center.constant - z0(k), w.zmp, &H, &q);

      // Conservative polygon with slack: Z + S - ref within [lo, hi].
      RowVectorXd zs = zrow;
      zs(L.slack(a) + k) = 1.0;
      AddSupportRows(zs, z0(k), s, a, h(a), L, &rows);
    }

    // Terminal capture point, shifted by the last slack.
    RowVectorXd xi = RowVectorXd::Zero(nv);
    xi.segment(L.jerk(a), N) =
        pred.Ppu.row(N - 1) + pred.Pvu.row(N - 1) / omega;
    xi(L.slack(a) + N - 1) = 1.0;
    const double xi0 =
        ((pred.Pps.row(N - 1) + pred.Pvs.row(N - 1) / omega) * x0)(0);
    AddSupportRows(xi, xi0, plan.samples.back(), a,
                   config.capture_scale * config.foot_half_extents(a), L,
                   &rows);

    // Footsteps: nominal offset cost, kinematic box.
    for (int j = 0; j < L.M; ++j) {
      const Landing& land = plan.landings[j];
      const Vec2 nominal = NominalOffset(config, gait, land.foot);
      RowVectorXd r = RowVectorXd::Zero(nv);
      r(L.foot(a) + j) = 1.0;
      const FootExpr stance = Ref(land.stance, a);
      for (const auto& [var, coef] : stance.terms) r(L.foot(a) + var) -= coef;
      AddSquare(r, stance.constant + nominal(a), w.foot, &H, &q);
      double lo = -config.step_x_max;
      double hi = config.step_x_max;
      if (a == 1) {
        if (land.foot == Foot::kLeft) {
          lo = config.step_y_min;
          hi = config.step_y_max;
        } else {
          lo = -config.step_y_max;
          hi = -config.step_y_min;
        }
      }
      rows.Add(r, lo + stance.constant, hi + stance.constant);
    }
  }

  for (const HalfPlane& hp : config.exclusions) {
    for (int j = 0; j < L.M; ++j) {
      RowVectorXd r = RowVectorXd::Zero(nv);
      r(L.foot(0) + j) = hp.normal.x();
      r(L.foot(1) + j) = hp.normal.y();
      rows.Add(r, -qp::kInf, hp.offset);
    }
  }

  qp::QpProblem problem(nv, static_cast<int>(rows.rows.size()));
  problem.H = 0.5 * (H + H.transpose());
  problem.q = q;
  for (size_t r = 0; r < rows.rows.size(); ++r) {
    problem.A.row(static_cast<int>(r)) = rows.rows[r];
    problem.lower(static_cast<int>(r)) = rows.lower[r];
    problem.upper(static_cast<int>(r)) = rows.upper[r];
  }
  for (int a = 0; a < 2; ++a) {
    for (int k = 0; k < n_delay; ++k) {
      problem.lb(L.slack(a) + k) = 0.0;
      problem.ub(L.slack(a) + k) = 0.0;
    }
  }
  return problem;
}

MpcSolution solve_mpc(const LipmState& state, const GaitSchedule& gait,
                      const MpcConfig& config, int n_delay) {
  const auto start = std::chrono::steady_clock::now();
  CheckDelay(config, n_delay);
  const int N = config.horizon_steps;
  const GaitPlan plan = PlanGait(gait, N, config.dt);
  const MpcLayout L{N, static_cast<int>(plan.landings.size())};
  const Prediction pred = BuildPrediction(
      N, config.dt, config.world.com_height / config.world.gravity);

  MpcSolution sol;
  sol.footstep_feet.reserve(L.M);
  for (const Landing& l : plan.landings) sol.footstep_feet.push_back(l.foot);

  struct Attempt {
    int delay;
    MpcMode mode;
  };
  std::vector<Attempt> attempts{{N, MpcMode::kUnslacked}};
  if (n_delay < N) attempts.push_back({n_delay, MpcMode::kSlacked});
  if (n_delay > 0) attempts.push_back({0, MpcMode::kSlackedNoDelay});

  for (const Attempt& at : attempts) {
    const qp::QpProblem problem = build_mpc_qp(state, gait, config, at.delay);
    const qp::QpSolution res = qp::solve(problem, config.qp);
    sol.qp_iterations += res.iterations;
    if (!res.optimal()) continue;
    sol.mode = at.mode;
    sol.n_delay = at.mode == MpcMode::kUnslacked ? n_delay : at.delay;
    sol.jerk.resize(N, 2);
    sol.slack.resize(N, 2);
    sol.footsteps.resize(L.M, 2);
    for (int a = 0; a < 2; ++a) {
      sol.jerk.col(a) = res.x.segment(L.jerk(a), N);
      sol.slack.col(a) = res.x.segment(L.slack(a), N);
      sol.footsteps.col(a) = res.x.segment(L.foot(a), L.M);
    }
    if (at.mode == MpcMode::kUnslacked) sol.slack.setZero();
    sol.slack_norm = sol.slack.norm();
    FillPredictions(state, config, pred, &sol);
    sol.solve_time = Seconds(start);
    return sol;
  }

  // Hold: cancel the acceleration over the first sample, keep nominal steps.
  sol.mode = MpcMode::kHold;
  sol.n_delay = 0;
  sol.jerk = Eigen::MatrixX2d::Zero(N, 2);
  sol.jerk.row(0) = -state.c_ddot.transpose() / config.dt;
  sol.slack = Eigen::MatrixX2d::Zero(N, 2);
  sol.footsteps.resize(L.M, 2);
  for (int j = 0; j < L.M; ++j) {
    const Landing& l = plan.landings[j];
    const Vec2 base = l.stance.var >= 0
                          ? Vec2(sol.footsteps.row(l.stance.var).transpose())
                          : l.stance.known;
    sol.footsteps.row(j) =
        (base + NominalOffset(config, gait, l.foot)).transpose();
  }
  FillPredictions(state, config, pred, &sol);
  sol.solve_time = Seconds(start);
  return sol;
}

DeltaZTrajectory extract_delta_z(const MpcSolution& solution,
                                 double slack_eps) {
  DeltaZTrajectory out;
  for (int k = 0; k < solution.slack.rows(); ++k) {
    const Vec2 s = solution.slack.row(k).transpose();
    if (s.norm() > slack_eps) out.entries.push_back({k + 1, s});
  }
  return out;
}

int compute_reach_delay(const Vec3& hand_position, const ContactPoint& contact,
                        double hand_speed, double dt_mpc, int horizon_steps) {
  if (!(hand_speed > 0.0)) {
    throw std::invalid_argument("hand_speed must be positive");
  }
  const double steps =
      (contact.position - hand_position).norm() / hand_speed / dt_mpc;
  // Guard against 5.000000001 style round-off in exact multiples.
  const double n = std::ceil(steps - 1e-9);
  return static_cast<int>(std::clamp(n, 0.0, double(horizon_steps)));
}

}  // namespace hcmpc
