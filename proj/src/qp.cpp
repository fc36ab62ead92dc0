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

#include "hcmpc/qp.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace hcmpc::qp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative size below which a constraint is treated as parallel to the
// step direction. Larger values keep the working set well conditioned.
constexpr double kDirTol = 1e-9;

enum class BoundState : unsigned char { kFree, kLower, kUpper, kFixed };

// Constraints in the one-sided form C x >= d.
struct OneSided {
  MatrixXd C;
  VectorXd d;
  std::vector<char> equality;
  std::vector<ConstraintId> id;
  VectorXd row_norm;

  int size() const { return static_cast<int>(d.size()); }
};

struct CoreResult {
  VectorXd x;
  QpStatus status = QpStatus::kIterationLimit;
  int iterations = 0;
  std::vector<int> working_rows;
  std::vector<BoundState> bounds;
  double kkt_residual = 0.0;
};

OneSided BuildOneSided(const QpProblem& p) {
  const int m = p.num_constraints();
  const int n = p.num_variables();
  int count = 0;
  for (int j = 0; j < m; ++j) {
    if (p.lower(j) == p.upper(j)) {
      ++count;
    } else {
      count += std::isfinite(p.lower(j)) + std::isfinite(p.upper(j));
    }
  }
  OneSided rows;
  rows.C.resize(count, n);
  rows.d.resize(count);
  rows.equality.reserve(count);
  rows.id.reserve(count);
  int r = 0;
  for (int j = 0; j < m; ++j) {
    if (p.lower(j) == p.upper(j)) {
      rows.C.row(r) = p.A.row(j);
      rows.d(r) = p.lower(j);
      rows.equality.push_back(1);
      rows.id.push_back(2 * j);
      ++r;
      continue;
    }
    if (std::isfinite(p.lower(j))) {
      rows.C.row(r) = p.A.row(j);
      rows.d(r) = p.lower(j);
      rows.equality.push_back(0);
      rows.id.push_back(2 * j);
      ++r;
    }
    if (std::isfinite(p.upper(j))) {
      rows.C.row(r) = -p.A.row(j);
      rows.d(r) = -p.upper(j);
      rows.equality.push_back(0);
      rows.id.push_back(2 * j + 1);
      ++r;
    }
  }
  rows.row_norm = rows.C.rowwise().norm();
  return rows;
}

// Step on the reduced space. Returns false when the step is a descent ray of
// zero curvature rather than a minimizer.
bool ReducedStep(const MatrixXd& Hr, const VectorXd& gr, VectorXd* pz) {
  Eigen::LLT<MatrixXd> llt(Hr);
  if (llt.info() == Eigen::Success) {
    const VectorXd diag = llt.matrixLLT().diagonal();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    if (dmax > 0 && dmin * dmin >= 1e-12 * dmax * dmax) {
      *pz = -llt.solve(gr);
      return true;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Hr);
  const VectorXd& ev = es.eigenvalues();
  const MatrixXd& V = es.eigenvectors();
  const double emax = ev.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * emax;
  const VectorXd proj = V.transpose() * gr;
  const double gscale = std::max(1.0, gr.cwiseAbs().maxCoeff());
  pz->setZero(gr.size());
  bool ray = false;
  for (int k = 0; k < ev.size(); ++k) {
    if (ev(k) <= tol && std::abs(proj(k)) > 1e-11 * gscale) ray = true;
  }
  for (int k = 0; k < ev.size(); ++k) {
    if (ray) {
      if (ev(k) <= tol) *pz -= proj(k) * V.col(k);
    } else if (ev(k) > tol) {
      *pz -= (proj(k) / ev(k)) * V.col(k);
    }
  }
  return !ray;
}

// Primal active-set iterations from a feasible x. When `stop_var` >= 0 the
// run ends as soon as that variable reaches its lower bound (feasibility
// phase).
CoreResult RunActiveSet(const MatrixXd& H, const VectorXd& q,
                        const OneSided& rows, const VectorXd& lb,
                        const VectorXd& ub, VectorXd x, std::vector<int> W,
                        std::vector<BoundState> bs, int max_iter,
                        int stop_var, int bound_base) {
  const int n = static_cast<int>(x.size());
  const int mc = rows.size();
  auto bound_id = [&](int i, bool upper) {
    return bound_base + 2 * i + (upper ? 1 : 0);
  };
  std::vector<char> in_w(mc, 0);
  for (int r : W) in_w[r] = 1;

  CoreResult out;
  bool at_minimizer = false;
  bool degenerate = false;
  std::vector<int> F;
  F.reserve(n);

  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    F.clear();
    for (int i = 0; i < n; ++i) {
      if (bs[i] == BoundState::kFree) F.push_back(i);
    }
    const int nf = static_cast<int>(F.size());
    const int w = static_cast<int>(W.size());

    MatrixXd CWF(w, nf);
    VectorXd rW(w);
    for (int a = 0; a < w; ++a) {
      const int r = W[a];
      for (int b = 0; b < nf; ++b) CWF(a, b) = rows.C(r, F[b]);
      rW(a) = rows.d(r) - rows.C.row(r).dot(x);
    }

    MatrixXd Q;
    MatrixXd R;
    if (w > 0) {
      Eigen::HouseholderQR<MatrixXd> qr(CWF.transpose());
      Q = qr.householderQ();
      R = qr.matrixQR().topLeftCorner(w, w).triangularView<Eigen::Upper>();
    }

    VectorXd pF = VectorXd::Zero(nf);
    bool newton = true;
    if (!at_minimizer && w > 0) {
      // Restore the working constraints exactly before stepping, so the
      // ratio test sees a pure null-space direction and any blocking
      // constraint is independent of the working set.
      const VectorXd y =
          R.transpose().triangularView<Eigen::Lower>().solve(rW);
      const VectorXd drift = Q.leftCols(w) * y;
      for (int a = 0; a < nf; ++a) x(F[a]) += drift(a);
    }
    VectorXd g = H * x + q;
    const int rdim = nf - w;
    if (!at_minimizer && rdim > 0) {
      MatrixXd HFF(nf, nf);
      VectorXd gF(nf);
      for (int a = 0; a < nf; ++a) {
        gF(a) = g(F[a]);
        for (int b = 0; b < nf; ++b) HFF(a, b) = H(F[a], F[b]);
      }
      VectorXd pz;
      if (w > 0) {
        const MatrixXd Z = Q.rightCols(rdim);
        const MatrixXd Hr = Z.transpose() * (HFF * Z);
        const VectorXd gr = Z.transpose() * gF;
        newton = ReducedStep(Hr, gr, &pz);
        pF = Z * pz;
      } else {
        newton = ReducedStep(HFF, gF, &pz);
        pF = pz;
      }
    }

    const double xscale = std::max(1.0, x.cwiseAbs().maxCoeff());
    const bool small_step =
        newton && (rdim <= 0 || pF.cwiseAbs().maxCoeff() <= 1e-12 * xscale);

    if (!small_step) {
      VectorXd p = VectorXd::Zero(n);
      for (int a = 0; a < nf; ++a) p(F[a]) = pF(a);
      const double pnorm = p.norm();
      const VectorXd Cp = rows.C * p;
      double alpha = newton ? 1.0 : qp::kInf;
      int block_row = -1;
      int block_var = -1;
      bool block_upper = false;
      int block_id = INT_MAX;
      auto consider = [&](double a, int id) {
        if (a < alpha || (a == alpha && id < block_id)) {
          alpha = a;
          block_id = id;
          return true;
        }
        return false;
      };
      for (int r = 0; r < mc; ++r) {
        if (in_w[r]) continue;
        if (Cp(r) < -kDirTol * rows.row_norm(r) * pnorm) {
          const double slack = rows.C.row(r).dot(x) - rows.d(r);
          if (consider(std::max(0.0, slack) / (-Cp(r)), rows.id[r])) {
            block_row = r;
            block_var = -1;
          }
        }
      }
      for (int i : F) {
        const double tiny = kDirTol * pnorm;
        if (p(i) < -tiny && std::isfinite(lb(i))) {
          if (consider(std::max(0.0, x(i) - lb(i)) / (-p(i)),
                       bound_id(i, false))) {
            block_var = i;
            block_upper = false;
            block_row = -1;
          }
        } else if (p(i) > tiny && std::isfinite(ub(i))) {
          if (consider(std::max(0.0, ub(i) - x(i)) / p(i), bound_id(i, true))) {
            block_var = i;
            block_upper = true;
            block_row = -1;
          }
        }
      }
      if (!std::isfinite(alpha)) {
        out.status = QpStatus::kUnbounded;
        break;
      }
      x += alpha * p;
      degenerate = (alpha == 0.0);
      at_minimizer = false;
      if (block_row >= 0) {
        W.push_back(block_row);
        in_w[block_row] = 1;
      } else if (block_var >= 0) {
        bs[block_var] = block_upper ? BoundState::kUpper : BoundState::kLower;
        x(block_var) = block_upper ? ub(block_var) : lb(block_var);
        if (block_var == stop_var && !block_upper) {
          out.status = QpStatus::kOptimal;
          break;
        }
      } else {
        at_minimizer = true;
      }
      continue;
    }

    // Subspace minimizer: inspect the multipliers.
    g = H * x + q;
    VectorXd gF(nf);
    for (int a = 0; a < nf; ++a) gF(a) = g(F[a]);
    VectorXd lambda = VectorXd::Zero(w);
    if (w > 0) {
      const VectorXd qtg = Q.leftCols(w).transpose() * gF;
      lambda = R.triangularView<Eigen::Upper>().solve(qtg);
    }
    VectorXd ctl = VectorXd::Zero(n);
    for (int a = 0; a < w; ++a) ctl += lambda(a) * rows.C.row(W[a]).transpose();
    out.kkt_residual = 0.0;
    for (int i : F) {
      out.kkt_residual = std::max(out.kkt_residual, std::abs(g(i) - ctl(i)));
    }

    const double dual_tol = 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff());
    double worst = -dual_tol;
    int drop_pos = -1;
    int drop_var = -1;
    int drop_id = INT_MAX;
    auto candidate = [&](double value, int id) {
      if (value >= -dual_tol) return false;
      if (degenerate) {
        // Bland's rule after a zero-length step.
        if (id < drop_id) {
          drop_id = id;
          return true;
        }
        return false;
      }
      if (value < worst || (value == worst && id < drop_id)) {
        worst = value;
        drop_id = id;
        return true;
      }
      return false;
    };
    for (int a = 0; a < w; ++a) {
      if (rows.equality[W[a]]) continue;
      if (candidate(lambda(a), rows.id[W[a]])) {
        drop_pos = a;
        drop_var = -1;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (bs[i] == BoundState::kLower || bs[i] == BoundState::kUpper) {
        const bool upper = bs[i] == BoundState::kUpper;
        const double mu = upper ? -(g(i) - ctl(i)) : (g(i) - ctl(i));
        if (candidate(mu, bound_id(i, upper))) {
          drop_var = i;
          drop_pos = -1;
        }
      }
    }
    if (drop_pos < 0 && drop_var < 0) {
      out.status = QpStatus::kOptimal;
      break;
    }
    if (drop_pos >= 0) {
      in_w[W[drop_pos]] = 0;
      W.erase(W.begin() + drop_pos);
    } else {
      bs[drop_var] = BoundState::kFree;
    }
    at_minimizer = false;
  }
  out.x = std::move(x);
  out.working_rows = std::move(W);
  out.bounds = std::move(bs);
  return out;
}

double RowViolation(const OneSided& rows, const VectorXd& x) {
  double v = 0.0;
  for (int r = 0; r < rows.size(); ++r) {
    const double s = rows.C.row(r).dot(x) - rows.d(r);
    v = std::max(v, rows.equality[r] ? std::abs(s) : -s);
  }
  return v;
}

}  // namespace

QpProblem::QpProblem(int n, int m)
    : H(MatrixXd::Zero(n, n)),
      q(VectorXd::Zero(n)),
      A(MatrixXd::Zero(m, n)),
      lower(VectorXd::Constant(m, -kInf)),
      upper(VectorXd::Constant(m, kInf)),
      lb(VectorXd::Constant(n, -kInf)),
      ub(VectorXd::Constant(n, kInf)) {}

void QpProblem::Validate() const {
  const auto n = q.size();
  const auto m = A.rows();
  if (H.rows() != n || H.cols() != n || A.cols() != n || lower.size() != m ||
      upper.size() != m || lb.size() != n || ub.size() != n) {
    throw MalformedProblem("QP dimensions are inconsistent");
  }
  if (!H.allFinite() || !q.allFinite() || !A.allFinite()) {
    throw MalformedProblem("QP data must be finite");
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j) ||
        lower(j) == kInf || upper(j) == -kInf) {
      throw MalformedProblem("row " + std::to_string(j) +
                             " has invalid bounds");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lb(i)) || std::isnan(ub(i)) || lb(i) > ub(i) ||
        lb(i) == kInf || ub(i) == -kInf) {
      throw MalformedProblem("variable " + std::to_string(i) +
                             " has invalid bounds");
    }
  }
  const double hnorm = n > 0 ? H.cwiseAbs().maxCoeff() : 0.0;
  if (n > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, hnorm)) {
    throw MalformedProblem("H is not symmetric");
  }
  if (n > 0 && hnorm > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8 * H.norm()) {
      throw MalformedProblem("H is not positive semidefinite");
    }
  }
}

std::string_view ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "Optimal";
    case QpStatus::kInfeasible:
      return "Infeasible";
    case QpStatus::kIterationLimit:
      return "IterationLimit";
    case QpStatus::kUnbounded:
      return "Unbounded";
  }
  return "Unknown";
}

double MaxViolation(const QpProblem& problem, const VectorXd& x) {
  double v = 0.0;
  const VectorXd ax = problem.A * x;
  for (Eigen::Index j = 0; j < ax.size(); ++j) {
    v = std::max({v, problem.lower(j) - ax(j), ax(j) - problem.upper(j)});
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    v = std::max({v, problem.lb(i) - x(i), x(i) - problem.ub(i)});
  }
  return v;
}

double Objective(const QpProblem& problem, const VectorXd& x) {
  return 0.5 * x.dot(problem.H * x) + problem.q.dot(x);
}

QpSolution solve(const QpProblem& problem, const SolverSettings& settings,
                 const WarmStart* warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.Validate();
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  const int max_iter =
      settings.max_iterations > 0 ? settings.max_iterations : 50 * std::max(n, 1);

  const OneSided rows = BuildOneSided(problem);
  const int mc = rows.size();

  VectorXd x = VectorXd::Zero(n);
  if (warm_start != nullptr && warm_start->x.size() == n &&
      warm_start->x.allFinite()) {
    x = warm_start->x;
  }
  std::vector<BoundState> bs(n, BoundState::kFree);
  for (int i = 0; i < n; ++i) {
    if (problem.lb(i) == problem.ub(i)) {
      bs[i] = BoundState::kFixed;
      x(i) = problem.lb(i);
    } else {
      x(i) = std::clamp(x(i), problem.lb(i), problem.ub(i));
    }
  }

  QpSolution sol;
  int iterations = 0;

  const double violation = RowViolation(rows, x);
  if (violation > settings.feas_tol) {
    // Feasibility phase: minimize t subject to C x + t >= d, t >= 0.
    int extra = 0;
    for (int r = 0; r < mc; ++r) extra += rows.equality[r] ? 1 : 0;
    OneSided aug;
    aug.C = MatrixXd::Zero(mc + extra, n + 1);
    aug.d.resize(mc + extra);
    int k = 0;
    for (int r = 0; r < mc; ++r) {
      aug.C.row(k).head(n) = rows.C.row(r);
      aug.C(k, n) = 1.0;
      aug.d(k) = rows.d(r);
      aug.equality.push_back(0);
      aug.id.push_back(2 * k);
      ++k;
      if (rows.equality[r]) {
        aug.C.row(k).head(n) = -rows.C.row(r);
        aug.C(k, n) = 1.0;
        aug.d(k) = -rows.d(r);
        aug.equality.push_back(0);
        aug.id.push_back(2 * k);
        ++k;
      }
    }
    aug.row_norm = aug.C.rowwise().norm();
    VectorXd xa(n + 1);
    xa.head(n) = x;
    xa(n) = violation;
    VectorXd lba(n + 1);
    VectorXd uba(n + 1);
    lba.head(n) = problem.lb;
    uba.head(n) = problem.ub;
    lba(n) = 0.0;
    uba(n) = kInf;
    std::vector<BoundState> bsa = bs;
    bsa.push_back(BoundState::kFree);
    VectorXd qa = VectorXd::Zero(n + 1);
    qa(n) = 1.0;
    const MatrixXd Ha = MatrixXd::Zero(n + 1, n + 1);
    CoreResult p1 = RunActiveSet(Ha, qa, aug, lba, uba, xa, {}, bsa,
                                 50 * (n + 1), n, 2 * (mc + extra));
    iterations += p1.iterations;
    x = p1.x.head(n);
    const bool feasible = RowViolation(rows, x) <= settings.feas_tol;
    if (!feasible) {
      sol.x = x;
      sol.status = p1.status == QpStatus::kIterationLimit
                       ? QpStatus::kIterationLimit
                       : QpStatus::kInfeasible;
      sol.iterations = iterations;
      sol.objective = Objective(problem, x);
      sol.max_violation = MaxViolation(problem, x);
      sol.solve_time = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
      return sol;
    }
    for (int i = 0; i < n; ++i) {
      if (bs[i] != BoundState::kFixed) {
        x(i) = std::clamp(x(i), problem.lb(i), problem.ub(i));
      }
    }
  }

  // Initial working set: equality rows, then warm-start rows active at x.
  std::vector<int> W;
  auto independent_with = [&](int r) {
    std::vector<int> F;
    for (int i = 0; i < n; ++i) {
      if (bs[i] == BoundState::kFree) F.push_back(i);
    }
    const int w = static_cast<int>(W.size()) + 1;
    if (w > static_cast<int>(F.size())) return false;
    MatrixXd M(w, F.size());
    for (int a = 0; a < w; ++a) {
      const int row = a + 1 < w ? W[a] : r;
      for (size_t b = 0; b < F.size(); ++b) M(a, b) = rows.C(row, F[b]);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(M.transpose());
    qr.setThreshold(1e-10);
    return qr.rank() == w;
  };
  for (int r = 0; r < mc; ++r) {
    if (rows.equality[r] && independent_with(r)) W.push_back(r);
  }
  if (warm_start != nullptr) {
    const int bound_base = 2 * m;
    for (ConstraintId id : warm_start->active_set) {
      if (id >= bound_base) {
        const int i = (id - bound_base) / 2;
        const bool upper = (id - bound_base) % 2 == 1;
        if (i >= n || bs[i] != BoundState::kFree) continue;
        const double bound = upper ? problem.ub(i) : problem.lb(i);
        if (std::isfinite(bound) && std::abs(x(i) - bound) <= settings.feas_tol) {
          x(i) = bound;
          bs[i] = upper ? BoundState::kUpper : BoundState::kLower;
        }
        continue;
      }
      for (int r = 0; r < mc; ++r) {
        if (rows.id[r] != id || rows.equality[r]) continue;
        const double slack = rows.C.row(r).dot(x) - rows.d(r);
        if (std::abs(slack) <= settings.feas_tol && independent_with(r)) {
          W.push_back(r);
        }
      }
    }
  }

  CoreResult p2 = RunActiveSet(problem.H, problem.q, rows, problem.lb,
                               problem.ub, x, W, bs, max_iter, -1, 2 * m);
  iterations += p2.iterations;
  sol.x = p2.x;
  sol.status = p2.status;
  sol.iterations = iterations;
  sol.kkt_residual = p2.kkt_residual;
  sol.objective = Objective(problem, sol.x);
  sol.max_violation = MaxViolation(problem, sol.x);
  for (int r : p2.working_rows) sol.active_set.push_back(rows.id[r]);
  for (int i = 0; i < n; ++i) {
    if (p2.bounds[i] == BoundState::kLower) sol.active_set.push_back(2 * m + 2 * i);
    if (p2.bounds[i] == BoundState::kUpper) sol.active_set.push_back(2 * m + 2 * i + 1);
    if (p2.bounds[i] == BoundState::kFixed) sol.active_set.push_back(2 * m + 2 * i);
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  if (sol.status == QpStatus::kOptimal && sol.max_violation > settings.feas_tol) {
    sol.status = QpStatus::kIterationLimit;
  }
  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return sol;
}

std::optional<double> solve_1d(double a, double b,
                               std::span<const Interval> intervals) {
  if (!(a > 0)) throw std::invalid_argument("solve_1d requires a > 0");
  double lo = -kInf;
  double hi = kInf;
  for (const Interval& iv : intervals) {
    lo = std::max(lo, iv.lo);
    hi = std::min(hi, iv.hi);
  }
  if (lo > hi) return std::nullopt;
  return std::clamp(-b / (2.0 * a), lo, hi);
}

}  // namespace hcmpc::qp
