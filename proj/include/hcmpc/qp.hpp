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

#ifndef HCMPC_QP_HPP_
#define HCMPC_QP_HPP_

#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hcmpc::qp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class MalformedProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// minimize    1/2 x'Hx + q'x
// subject to  lower <= A x <= upper
//             lb    <=  x  <= ub
// Infinite entries disable the corresponding side. lower == upper makes an
// equality row, lb == ub fixes a variable.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  QpProblem() = default;
  // Unconstrained problem with n variables and m empty rows.
  QpProblem(int n, int m);

  int num_variables() const { return static_cast<int>(q.size()); }
  int num_constraints() const { return static_cast<int>(A.rows()); }

  // Throws MalformedProblem on dimension mismatches, asymmetric or indefinite
  // H, NaNs, or crossed bounds.
  void Validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit, kUnbounded };

std::string_view ToString(QpStatus status);

struct SolverSettings {
  double feas_tol = 1e-8;
  double kkt_tol = 1e-6;
  // 0 selects 50 * n.
  int max_iterations = 0;
};

// Identifies one side of a constraint: general rows come first as
// 2*row (lower) / 2*row + 1 (upper), then variable bounds as
// 2*m + 2*var (lb) / 2*m + 2*var + 1 (ub).
using ConstraintId = int;

// Optional starting information. Used only as a hint: a guess that is not
// feasible is repaired by the feasibility phase.
struct WarmStart {
  Eigen::VectorXd x;
  std::vector<ConstraintId> active_set;
};

struct QpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  QpStatus status = QpStatus::kInfeasible;
  int iterations = 0;
  double solve_time = 0.0;  // [s]
  // Working set at termination, sorted.
  std::vector<ConstraintId> active_set;
  // max |Hx + q - sum lambda_i c_i| at termination.
  double kkt_residual = 0.0;
  // Largest constraint violation of x.
  double max_violation = 0.0;

  bool optimal() const { return status == QpStatus::kOptimal; }
};

// Dense primal active-set method. Deterministic: ties in the choice of the
// blocking or dropped constraint resolve to the lowest ConstraintId.
QpSolution solve(const QpProblem& problem, const SolverSettings& settings = {},
                 const WarmStart* warm_start = nullptr);

// Largest violation of the constraints of `problem` at `x`.
double MaxViolation(const QpProblem& problem, const Eigen::VectorXd& x);

double Objective(const QpProblem& problem, const Eigen::VectorXd& x);

struct Interval {
  double lo = -kInf;
  double hi = kInf;
};

// Minimizes a*x^2 + b*x over the intersection of `intervals`; nullopt when
// the intersection is empty. Requires a > 0.
std::optional<double> solve_1d(double a, double b,
                               std::span<const Interval> intervals);

}  // namespace hcmpc::qp

#endif  // HCMPC_QP_HPP_
