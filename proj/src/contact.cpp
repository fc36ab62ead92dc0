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

#include "hcmpc/contact.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace hcmpc {
namespace {

using Eigen::Matrix;
using Eigen::MatrixXd;
using Eigen::RowVector3d;
using Eigen::VectorXd;

// |alpha| below this makes a row constant in f_z.
constexpr double kFlatCoefficient = 1e-13;
constexpr int kSaturationBisections = 40;

// Interval of x satisfying alpha * x + beta >= 0; an empty interval has
// lo > hi.
qp::Interval HalfLine(double alpha, double beta, double feas_tol) {
  if (std::abs(alpha) <= kFlatCoefficient) {
    if (beta >= -feas_tol) return {};
    return {1.0, -1.0};
  }
  const double root = -beta / alpha;
  if (alpha > 0.0) return {root, qp::kInf};
  return {-qp::kInf, root};
}

// Functionals on the surface-frame force whose nonnegativity is the
// linearized friction cone, followed by the normal force itself.
std::array<RowVector3d, 5> ConeRows(double mu) {
  return {RowVector3d(-1.0, 0.0, mu), RowVector3d(1.0, 0.0, mu),
          RowVector3d(0.0, -1.0, mu), RowVector3d(0.0, 1.0, mu),
          RowVector3d(0.0, 0.0, 1.0)};
}

Eigen::Vector3d CostScale(double kappa) {
  return Eigen::Vector3d(1.0, 1.0, std::sqrt(kappa));
}

// Affine force map f = M x + v of QP2.
struct ForceMap {
  Matrix<double, 3, 5> M;
  Eigen::Vector3d v;
};

ForceMap BuildForceMap(const ForceStepProblem& p) {
  const ForceLine line = force_line_coefficients(p.state, p.contact.position,
                                                 p.delta_z, p.world);
  const double pz = p.contact.position.z();
  const double sigma = p.sign == BilinearSign::kSubstitution ? -1.0 : 1.0;
  const double mg = p.world.weight();
  ForceMap map;
  map.M.setZero();
  map.M(0, 0) = line.slope.x();
  map.M(1, 0) = line.slope.y();
  map.M(2, 0) = 1.0;
  map.M(0, 1) = mg / pz;
  map.M(1, 2) = mg / pz;
  map.M(0, 3) = sigma / pz;
  map.M(1, 4) = sigma / pz;
  map.v << line.offset.x(), line.offset.y(), 0.0;
  return map;
}

struct ContactScore {
  bool feasible = false;
  int first_infeasible_step = 0;
  double total = 0.0;
  std::vector<StepForce> steps;
};

ContactScore ScoreContact(const DeltaZTrajectory& delta_z,
                          std::span<const LipmState> states,
                          const ContactPoint& contact,
                          const ContactSettings& settings) {
  ContactScore score;
  score.steps.reserve(delta_z.entries.size());
  for (size_t j = 0; j < delta_z.entries.size(); ++j) {
    const DeltaZEntry& entry = delta_z.entries[j];
    const ForceStepProblem problem =
        ForceStepProblem::Make(states[j], entry.delta_z, contact, settings);
    const std::optional<Qp2Solution> sol = solve_qp2(problem);
    if (!sol) {
      score.first_infeasible_step = entry.step;
      score.steps.clear();
      return score;
    }
    score.steps.push_back({entry.step, sol->force, entry.delta_z + sol->s_z,
                           sol->objective, sol->bilinear_violation});
    score.total += sol->objective;
  }
  score.feasible = true;
  return score;
}

void CheckSelectionInputs(const DeltaZTrajectory& delta_z,
                          std::span<const LipmState> states,
                          std::span<const ContactPoint> contacts) {
  if (delta_z.empty()) {
    throw std::invalid_argument("select_contact: empty delta_z trajectory");
  }
  if (states.size() != delta_z.entries.size()) {
    throw std::invalid_argument(
        "select_contact: one state snapshot per delta_z entry required");
  }
  for (const ContactPoint& c : contacts) c.Validate();
}

ContactPlan Reduce(std::span<const ContactPoint> contacts,
                   std::vector<ContactScore>& scores) {
  int best = -1;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].feasible) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const double diff = scores[i].total - scores[best].total;
    if (diff < -1e-9 ||
        (std::abs(diff) <= 1e-9 && contacts[i].id < contacts[best].id)) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    std::vector<ContactDiagnostic> diag;
    diag.reserve(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
      diag.push_back({contacts[i].id, scores[i].first_infeasible_step});
    }
    throw NoContactFeasible(std::move(diag));
  }
  ContactPlan plan;
  plan.contact_id = contacts[best].id;
  plan.total_objective = scores[best].total;
  plan.steps = std::move(scores[best].steps);
  for (const StepForce& s : plan.steps) {
    plan.max_bilinear_violation =
        std::max(plan.max_bilinear_violation, s.bilinear_violation);
  }
  return plan;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

double ContactSettings::resolved_f_z_upper() const {
  return std::isfinite(f_z_upper) ? f_z_upper : 0.5 * world.weight();
}

ForceStepProblem ForceStepProblem::Make(const LipmState& state,
                                        const Vec2& delta_z,
                                        const ContactPoint& contact,
                                        const ContactSettings& settings) {
  ForceStepProblem p;
  p.state = state;
  p.delta_z = delta_z;
  p.contact = contact;
  p.kappa = settings.kappa;
  p.s_z_bounds = settings.s_z_bounds;
  p.f_z_lower = settings.f_z_lower;
  p.f_z_upper = settings.resolved_f_z_upper();
  p.sign = settings.sign;
  p.world = settings.world;
  p.qp = settings.qp;
  return p;
}

void ForceStepProblem::Validate() const {
  world.Validate();
  contact.Validate();
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("ForceStepProblem: kappa must lie in (0, 1]");
  }
  if (!(s_z_bounds.x() >= 0.0 && s_z_bounds.y() >= 0.0)) {
    throw std::invalid_argument("ForceStepProblem: negative s_z_bounds");
  }
  if (!(f_z_lower <= f_z_upper)) {
    throw std::invalid_argument("ForceStepProblem: crossed f_z bounds");
  }
  if (!(f_z_upper < world.weight() - DenominatorGuard(world))) {
    throw std::invalid_argument(
        "ForceStepProblem: f_z upper bound reaches the body weight");
  }
  if (!state.IsFinite() || !delta_z.allFinite()) {
    throw std::invalid_argument("ForceStepProblem: non-finite input");
  }
}

double force_cost(const Force3& force, const ContactPoint& contact,
                  double kappa) {
  const Eigen::Vector3d g = contact.rotation * force;
  return g.x() * g.x() + g.y() * g.y() + kappa * g.z() * g.z();
}

double cone_violation(const Force3& force, const ContactPoint& contact) {
  const Eigen::Vector3d g = contact.rotation * force;
  double v = 0.0;
  for (const RowVector3d& row : ConeRows(contact.mu)) {
    v = std::max(v, -row.dot(g));
  }
  return std::max(v, g.z() - contact.f_n_max);
}

std::optional<Qp1Solution> solve_qp1(const ForceStepProblem& problem) {
  problem.Validate();
  const ForceLine line = force_line_coefficients(
      problem.state, problem.contact.position, problem.delta_z, problem.world);
  const Eigen::Vector3d u(line.slope.x(), line.slope.y(), 1.0);
  const Eigen::Vector3d v(line.offset.x(), line.offset.y(), 0.0);
  const Mat3& R = problem.contact.rotation;
  const double tol = problem.qp.feas_tol;

  std::vector<qp::Interval> intervals;
  intervals.reserve(8);
  intervals.push_back({problem.f_z_lower, problem.f_z_upper});
  const Eigen::Vector3d Ru = R * u;
  const Eigen::Vector3d Rv = R * v;
  for (const RowVector3d& row : ConeRows(problem.contact.mu)) {
    intervals.push_back(HalfLine(row.dot(Ru), row.dot(Rv), tol));
  }
  intervals.push_back(
      HalfLine(-Ru.z(), problem.contact.f_n_max - Rv.z(), tol));

  const Eigen::Vector3d d = CostScale(problem.kappa);
  const Eigen::Vector3d a_vec = d.cwiseProduct(Ru);
  const Eigen::Vector3d b_vec = d.cwiseProduct(Rv);
  const std::optional<double> f_z =
      qp::solve_1d(a_vec.squaredNorm(), 2.0 * a_vec.dot(b_vec), intervals);
  if (!f_z) return std::nullopt;
  Qp1Solution sol;
  sol.f_z = *f_z;
  sol.force = u * *f_z + v;
  sol.objective = force_cost(sol.force, problem.contact, problem.kappa);
  return sol;
}

qp::QpProblem build_qp2(const ForceStepProblem& problem) {
  problem.Validate();
  const ForceMap map = BuildForceMap(problem);
  const Mat3& R = problem.contact.rotation;
  const Matrix<double, 3, 5> RM = R * map.M;
  const Eigen::Vector3d Rv = R * map.v;

  qp::QpProblem qp(5, 13);
  const Eigen::Vector3d d = CostScale(problem.kappa);
  const Matrix<double, 3, 5> DRM = d.asDiagonal() * RM;
  const Eigen::Vector3d DRv = d.cwiseProduct(Rv);
  qp.H = 2.0 * DRM.transpose() * DRM;
  qp.q = 2.0 * DRM.transpose() * DRv;

  const auto rows = ConeRows(problem.contact.mu);
  for (int r = 0; r < 4; ++r) {
    qp.A.row(r) = rows[r] * RM;
    qp.lower(r) = -rows[r].dot(Rv);
  }
  qp.A.row(4) = RM.row(2);
  qp.lower(4) = -Rv.z();
  qp.upper(4) = problem.contact.f_n_max - Rv.z();

  const double fl = problem.f_z_lower;
  const double fu = problem.f_z_upper;
  for (int axis = 0; axis < 2; ++axis) {
    const double sl = -problem.s_z_bounds(axis);
    const double su = problem.s_z_bounds(axis);
    const int s = 1 + axis;
    const int w = 3 + axis;
    const int base = 5 + 4 * axis;
    // W - a f - b S compared against -a b' for each envelope plane.
    auto plane = [&](int row, double a, double b) {
      qp.A(base + row, w) = 1.0;
      qp.A(base + row, 0) = -a;
      qp.A(base + row, s) = -b;
    };
    plane(0, sl, fl);
    qp.lower(base + 0) = -sl * fl;
    plane(1, su, fu);
    qp.lower(base + 1) = -su * fu;
    plane(2, su, fl);
    qp.upper(base + 2) = -su * fl;
    plane(3, sl, fu);
    qp.upper(base + 3) = -sl * fu;
  }
  qp.lb << fl, -problem.s_z_bounds.x(), -problem.s_z_bounds.y(), -qp::kInf,
      -qp::kInf;
  qp.ub << fu, problem.s_z_bounds.x(), problem.s_z_bounds.y(), qp::kInf,
      qp::kInf;
  return qp;
}

std::optional<Qp2Solution> solve_qp2(const ForceStepProblem& problem) {
  const qp::QpProblem qp = build_qp2(problem);
  // The QP1 point (S = 0, W = 0) is feasible for QP2 whenever it exists and
  // seeds the active-set iterations.
  qp::WarmStart warm;
  const qp::WarmStart* warm_ptr = nullptr;
  if (const auto qp1 = solve_qp1(problem)) {
    warm.x = VectorXd::Zero(5);
    warm.x(0) = qp1->f_z;
    warm_ptr = &warm;
  }
  const qp::QpSolution res = qp::solve(qp, problem.qp, warm_ptr);
  if (res.status != qp::QpStatus::kOptimal) return std::nullopt;

  const ForceMap map = BuildForceMap(problem);
  Qp2Solution sol;
  sol.f_z = res.x(0);
  sol.s_z = res.x.segment<2>(1);
  sol.w = res.x.segment<2>(3);
  sol.force = map.M * res.x + map.v;
  sol.objective = force_cost(sol.force, problem.contact, problem.kappa);
  sol.iterations = res.iterations;
  const double pz = problem.contact.position.z();
  for (int axis = 0; axis < 2; ++axis) {
    sol.bilinear_violation =
        std::max(sol.bilinear_violation,
                 std::abs(sol.w(axis) - sol.s_z(axis) * sol.f_z) / pz);
  }
  return sol;
}

double bilinear_gap_bound(const ForceStepProblem& problem) {
  const double df = problem.f_z_upper - problem.f_z_lower;
  const double ds = 2.0 * problem.s_z_bounds.maxCoeff();
  return ds * df / (4.0 * problem.contact.position.z());
}

NoContactFeasible::NoContactFeasible(std::vector<ContactDiagnostic> diagnostics)
    : std::runtime_error("no contact can realize the requested ZMP shifts"),
      diagnostics_(std::move(diagnostics)) {}

ContactPlan select_contact(const DeltaZTrajectory& delta_z,
                           std::span<const LipmState> states,
                           std::span<const ContactPoint> contacts,
                           const ContactSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  CheckSelectionInputs(delta_z, states, contacts);
  const int n = static_cast<int>(contacts.size());
  std::vector<ContactScore> scores(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      scores[i] = ScoreContact(delta_z, states, contacts[i], settings);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ContactPlan plan = Reduce(contacts, scores);
  plan.solve_time = Seconds(start);
  return plan;
}

ContactPlan select_contact_serial(const DeltaZTrajectory& delta_z,
                                  std::span<const LipmState> states,
                                  std::span<const ContactPoint> contacts,
                                  const ContactSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  CheckSelectionInputs(delta_z, states, contacts);
  std::vector<ContactScore> scores;
  scores.reserve(contacts.size());
  for (const ContactPoint& c : contacts) {
    scores.push_back(ScoreContact(delta_z, states, c, settings));
  }
  ContactPlan plan = Reduce(contacts, scores);
  plan.solve_time = Seconds(start);
  return plan;
}

InContactForce in_contact_force(const LipmState& state, const Vec2& delta_z,
                                const ContactPoint& contact,
                                const ContactSettings& settings) {
  auto attempt = [&](double scale) {
    return solve_qp2(
        ForceStepProblem::Make(state, scale * delta_z, contact, settings));
  };
  InContactForce out;
  if (auto sol = attempt(1.0)) {
    out.force = sol->force;
    out.realized_shift = delta_z + sol->s_z;
    return out;
  }
  out.saturated = true;
  std::optional<Qp2Solution> best = attempt(0.0);
  if (!best) {
    out.scale = 0.0;
    return out;
  }
  // Feasible scales form an interval containing 0, so bisection finds its
  // upper end.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < kSaturationBisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (auto sol = attempt(mid)) {
      lo = mid;
      best = std::move(sol);
    } else {
      hi = mid;
    }
  }
  out.scale = lo;
  out.force = best->force;
  out.realized_shift = lo * delta_z + best->s_z;
  return out;
}

}  // namespace hcmpc
