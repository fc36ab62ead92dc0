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

// Acceptance suite: one PASS or FAIL line per criterion, with the measured
// quantities and the wall-clock time against its budget. The exit code is
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hcmpc/config.hpp"
#include "hcmpc/contact.hpp"
#include "hcmpc/core_model.hpp"
#include "hcmpc/experiments.hpp"
#include "hcmpc/mpc.hpp"
#include "hcmpc/qp.hpp"
#include "hcmpc/sim.hpp"
#include "oracles/force_oracle.hpp"
#include "oracles/instances.hpp"
#include "oracles/qp_oracle.hpp"
#include "oracles/random_qp.hpp"

namespace hcmpc {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string Format(const char* fmt, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ------------------------------------------------------------------ 1 ---

Outcome AlgebraicIdentities() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const WorldParams world;
  double dz_err = 0.0;
  double line_err = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    LipmState s;
    s.c = Vec2(0.3 * u(rng), 0.3 * u(rng));
    s.c_dot = Vec2(u(rng), u(rng));
    s.c_ddot = Vec2(3.0 * u(rng), 3.0 * u(rng));
    const Vec3 p(0.6 * u(rng), 0.6 * u(rng), 1.0 + 0.5 * u(rng));
    // Vertical force kept below half the weight, clear of the guard.
    const Force3 f(100.0 * u(rng), 100.0 * u(rng),
                   0.5 * world.weight() * 0.5 * (1.0 + u(rng)));
    const Vec2 direct = delta_z(s, f, p, world);
    const Vec2 diff = zmp_hand(s, f, p, world) - zmp_lipm(s, world);
    dz_err = std::max(dz_err, (direct - diff).cwiseAbs().maxCoeff());

    const Vec2 target(0.05 * u(rng), 0.05 * u(rng));
    const double f_z = f.z();
    const Vec2 fxy = force_line(s, p, target, f_z, world);
    const Vec2 back = delta_z(s, Force3(fxy.x(), fxy.y(), f_z), p, world);
    line_err = std::max(line_err, (back - target).cwiseAbs().maxCoeff());
  }
  return {dz_err <= 1e-9 && line_err <= 1e-9,
          Format("%d tuples, max shift identity error %.2e m, max force "
                 "line round trip error %.2e m (tol 1e-9)",
                 n, dz_err, line_err)};
}

// ------------------------------------------------------------------ 2 ---

Outcome QpOracles() {
  std::mt19937_64 rng(2002);
  int qp_bad = 0;
  double qp_err = 0.0;
  for (int i = 0; i < 500; ++i) {
    const testing::RandomCase c = testing::MakeGeneralCase(rng);
    const qp::QpSolution s = qp::solve(c.problem);
    const auto ref = testing::EnumerateActiveSets(c.one_sided);
    if (!s.optimal() || !ref) {
      ++qp_bad;
      continue;
    }
    const double err = std::abs(s.objective - *ref);
    qp_err = std::max(qp_err, err);
    if (err > 1e-6) ++qp_bad;
  }
  int qp1_bad = 0;
  int qp1_feasible = 0;
  double qp1_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const testing::ForceInstance in = testing::RandomInstance(rng);
    const auto sol = solve_qp1(testing::ToProblem(in));
    const auto ref = testing::Qp1GridScan(in);
    if (ref) {
      ++qp1_feasible;
      if (!sol) {
        ++qp1_bad;
        continue;
      }
      const double err = std::abs(sol->objective - ref->objective);
      qp1_err = std::max(qp1_err, err);
      if (err > 1e-5) ++qp1_bad;
    } else if (sol &&
               cone_violation(sol->force, testing::ToContact(in)) > 1e-8) {
      ++qp1_bad;
    }
  }
  return {qp_bad == 0 && qp1_bad == 0,
          Format("dense QPs 500: %d mismatches, max objective gap %.2e "
                 "(tol 1e-6); QP1 1000 (%d feasible): %d mismatches, max gap "
                 "%.2e (tol 1e-5)",
                 qp_bad, qp_err, qp1_feasible, qp1_bad, qp1_err)};
}

// --------------------------------------------------------------- 3-5 ---

struct SweepRun {
  std::vector<SweepCase> cases;
  SweepStats stats;
  std::string csv;
  bool threw = false;
  std::string error;
  double seconds = 0.0;
};

SweepRun RunSweepOnce(const ExperimentConfig& cfg) {
  SweepRun run;
  const auto start = Clock::now();
  try {
    run.cases = run_sweep(cfg.sweep, cfg.scenario.contact, cfg.scenario.seed,
                          cfg.sweep.samples);
    run.stats = summarize_sweep(run.cases, cfg.sweep, cfg.scenario.contact);
  } catch (const std::exception& e) {
    run.threw = true;
    run.error = e.what();
  }
  run.seconds = Seconds(start);
  std::ostringstream csv;
  write_sweep_csv(csv, run.cases);
  run.csv = csv.str();
  return run;
}

Outcome Dominance(const SweepRun& run) {
  if (run.threw) return {false, "sweep raised: " + run.error};
  return {run.stats.dominance_violations == 0,
          Format("%lld samples, %lld QP1-feasible, %lld dominance "
                 "violations, 0 exceptions",
                 static_cast<long long>(run.stats.samples),
                 static_cast<long long>(run.stats.qp1_success),
                 static_cast<long long>(run.stats.dominance_violations))};
}

Outcome Statistics(const SweepRun& run) {
  if (run.threw) return {false, "sweep raised: " + run.error};
  const SweepStats& s = run.stats;
  const double rate_ratio = s.qp1_rate() > 0 ? s.qp2_rate() / s.qp1_rate() : 0;
  const double force_ratio =
      s.qp1_mean_force > 0 ? s.qp2_mean_force / s.qp1_mean_force : 1e9;
  return {rate_ratio >= 1.5 && force_ratio <= 0.75,
          Format("QP1 %.1f%% / %.2f N, QP2 %.1f%% / %.2f N; success ratio "
                 "%.3f (need >= 1.5), force ratio %.3f (need <= 0.75)",
                 100.0 * s.qp1_rate(), s.qp1_mean_force, 100.0 * s.qp2_rate(),
                 s.qp2_mean_force, rate_ratio, force_ratio)};
}

Outcome BilinearBound(const SweepRun& run) {
  if (run.threw) return {false, "sweep raised: " + run.error};
  const SweepStats& s = run.stats;
  return {s.max_bilinear_violation <= s.bilinear_bound,
          Format("max violation %.4f N, envelope bound %.4f N",
                 s.max_bilinear_violation, s.bilinear_bound)};
}

// ------------------------------------------------------------------ 6 ---

Outcome Scaling(const ExperimentConfig& cfg, std::string* table) {
  const auto rows = run_bench(cfg.bench, cfg.scenario.contact,
                              cfg.scenario.seed);
  const auto& hs = cfg.bench.horizons;
  const auto& ks = cfg.bench.contact_counts;
  auto at = [&](size_t h, size_t k) { return rows[h * ks.size() + k]; };
  bool monotone = true;
  bool ratios_ok = true;
  bool status_ok = true;
  std::ostringstream t;
  for (size_t h = 0; h < hs.size(); ++h) {
    for (size_t k = 0; k < ks.size(); ++k) {
      const BenchRow r = at(h, k);
      status_ok &= r.status == "ok";
      if (k > 0) monotone &= r.median_ms > at(h, k - 1).median_ms;
      if (h > 0) monotone &= r.median_ms > at(h - 1, k).median_ms;
    }
    const double ratio = at(h, ks.size() - 1).median_ms / at(h, 0).median_ms;
    ratios_ok &= ratio >= 4.0 && ratio <= 16.0;
    t << Format(" k=%d: %.3f..%.3f ms (x%.2f)", hs[h], at(h, 0).median_ms,
                at(h, ks.size() - 1).median_ms, ratio);
  }
  const TimingStats ic = time_in_contact_force(
      cfg.scenario.contact, cfg.bench.in_contact_repetitions,
      cfg.scenario.seed);
  *table = t.str();
  return {monotone && ratios_ok && status_ok && ic.median_ms < 1.0,
          Format("monotone %s, 40/5 ratios in [4,16] %s, in-contact median "
                 "%.4f ms (need < 1);",
                 monotone ? "yes" : "no", ratios_ok ? "yes" : "no",
                 ic.median_ms) +
              t.str()};
}

// ------------------------------------------------------------------ 7 ---

Outcome Enumeration() {
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int mismatches = 0;
  int selected = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int steps = count(rng);
    const int num_contacts = count(rng);
    std::vector<LipmState> states(steps);
    DeltaZTrajectory traj;
    for (int k = 0; k < steps; ++k) {
      states[k].c = Vec2(0.05 * u(rng), 0.05 * u(rng));
      states[k].c_ddot = Vec2(2.0 * u(rng), 2.0 * u(rng));
      traj.entries.push_back({k + 1, Vec2(0.03 * u(rng), 0.03 * u(rng))});
    }
    std::vector<testing::ForceInstance> frames(num_contacts);
    std::vector<ContactPoint> contacts;
    for (int c = 0; c < num_contacts; ++c) {
      frames[c] = testing::RandomInstance(rng);
      frames[c].p = Vec3(0.45 + 0.05 * u(rng), 0.2 * u(rng), 0.9 + 0.2 * u(rng));
      contacts.push_back(testing::ToContact(frames[c], c));
    }
    const ContactSettings settings = testing::ToSettings(frames[0]);

    // Exhaustive choice over contacts with reference per-step solves.
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> totals(num_contacts,
                               std::numeric_limits<double>::infinity());
    for (int c = 0; c < num_contacts; ++c) {
      double total = 0.0;
      for (int k = 0; k < steps && std::isfinite(total); ++k) {
        testing::ForceInstance in = frames[c];
        in.state = states[k];
        in.delta_z = traj.entries[k].delta_z;
        auto ref = testing::Qp2Reference(in);
        // A feasible f_z interval narrower than the coarse spacing needs
        // the fine scan.
        if (!ref) ref = testing::Qp2Reference(in, 20000);
        total = ref ? total + ref->objective
                    : std::numeric_limits<double>::infinity();
      }
      totals[c] = total;
      best = std::min(best, total);
    }

    std::optional<ContactPlan> plan;
    try {
      plan = select_contact(traj, states, contacts, settings);
    } catch (const NoContactFeasible&) {
    }
    if (!std::isfinite(best)) {
      if (plan) ++mismatches;
      continue;
    }
    if (!plan) {
      ++mismatches;
      continue;
    }
    ++selected;
    const double tol = 1e-6 * std::max(1.0, best);
    const double gap = std::abs(plan->total_objective - best);
    worst = std::max(worst, gap);
    // A different id is acceptable only when the totals tie.
    if (gap > tol || std::abs(totals[*plan->contact_id] - best) > tol) {
      ++mismatches;
    }
  }
  return {mismatches == 0,
          Format("200 instances (%d with a feasible contact), %d mismatches, "
                 "max total objective gap %.2e",
                 selected, mismatches, worst)};
}

// ------------------------------------------------------------------ 8 ---

Outcome Gating() {
  // Nominal walk.
  Scenario nominal;
  nominal.duration = 20.0;
  Simulator walk(nominal);
  std::vector<TickRecord> trace;
  walk.Run(&trace);
  double max_slack = 0.0;
  bool any_contact = false;
  for (const TickRecord& r : trace) {
    max_slack = std::max(max_slack, r.slack_norm);
    any_contact |= r.contact_id >= 0;
  }
  const bool nominal_ok = max_slack == 0.0 && !any_contact && !walk.fallen();

  // Footsteps blocked by the wall standoff, wall contacts reachable.
  Scenario blocked;
  blocked.duration = 6.0;
  add_wall(WallSpec{}, &blocked);
  const double t_push = 3.0;
  const Push push{t_push, Vec2(0.0, 20.0), 0.1};
  blocked.pushes.push_back(push);
  Simulator sim(blocked);
  // The replan on the push tick runs before the push acts, so the first
  // one to see it is the next. Stop just before that replan.
  const double t_replan =
      (std::floor(t_push / blocked.mpc.dt + 1e-9) + 1.0) * blocked.mpc.dt;
  sim.RunUntil(t_replan);
  const auto reachable = reachable_contacts(
      sim.scenario(), sim.state(), sim.hand(Foot::kLeft),
      sim.hand(Foot::kRight));
  int n_delay = blocked.mpc.horizon_steps;
  for (const ReachableContact& r : reachable) {
    n_delay = std::min(n_delay, r.delay);
  }
  const MpcSolution sol =
      solve_mpc(sim.state(), sim.gait(), blocked.mpc, n_delay);
  bool delay_rows_zero = true;
  for (int k = 0; k < n_delay; ++k) {
    delay_rows_zero &= sol.slack(k, 0) == 0.0 && sol.slack(k, 1) == 0.0;
  }
  std::vector<TickRecord> after;
  sim.RunUntil(t_replan + 1e-3, &after);
  const bool slack_seen = !after.empty() && after.front().slack_norm > 0.0;
  const bool pass = nominal_ok && !reachable.empty() && n_delay > 0 &&
                    sol.slack_norm > 0.0 && delay_rows_zero && slack_seen;
  return {pass,
          Format("nominal 20 s: max slack %.1e, contact %s, fall %s; blocked "
                 "push: slack %.3f at t=%.1f s (push %.1f s), N_D=%d, delay "
                 "rows exactly zero %s",
                 max_slack, any_contact ? "yes" : "no",
                 walk.fallen() ? "yes" : "no",
                 after.empty() ? 0.0 : after.front().slack_norm, t_replan,
                 t_push, n_delay, delay_rows_zero ? "yes" : "no")};
}

// ------------------------------------------------------------------ 9 ---

Outcome PushOrdering(const ExperimentConfig& cfg,
                     const std::vector<MaxPushRow>& rows) {
  const auto summary = summarize_maxpush(cfg, rows);
  bool hands_help = true;
  for (const MaxPushRow& on : rows) {
    if (!on.hands) continue;
    const bool early = on.variant == variant_name(cfg.maxpush, 0) ||
                       on.variant == variant_name(cfg.maxpush, 1);
    if (!early) continue;
    for (const MaxPushRow& off : rows) {
      if (!off.hands && off.variant == on.variant && off.phase == on.phase) {
        hands_help &= on.max_impulse >= off.max_impulse;
      }
    }
  }
  bool ordered = true;
  for (size_t v = 1; v < summary.size(); ++v) {
    ordered &= summary[v - 1].improvement >= summary[v].improvement;
  }
  const bool large = !summary.empty() && summary[0].improvement >= 0.5;
  std::string detail = Format(
      "hands-on >= hands-off at every zero/one-step phase %s, ordering %s, "
      "zero-step >= 50%% %s;",
      hands_help ? "yes" : "no", ordered ? "yes" : "no", large ? "yes" : "no");
  for (const MaxPushSummary& s : summary) {
    detail += Format(" %s %.2f -> %.2f N s (%+.0f%%)", s.variant.c_str(),
                     s.mean_without, s.mean_with, 100.0 * s.improvement);
  }
  return {hands_help && ordered && large, detail};
}

}  // namespace
}  // namespace hcmpc

int main() {
  using namespace hcmpc;
  int failures = 0;
  // `shared` is time spent earlier on work this criterion consumes.
  const auto report = [&](int id, const char* name, double budget,
                          const std::function<Outcome()>& fn,
                          double shared = 0.0) {
    const auto start = Clock::now();
    Outcome o = fn();
    const double secs = Seconds(start) + shared;
    const bool in_budget = secs < budget;
    const bool pass = o.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d %s: %s (%.1f s, budget %.0f s%s) %s\n", id,
                name, pass ? "PASS" : "FAIL", secs, budget,
                in_budget ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  };

  const ExperimentConfig cfg;
  report(1, "algebraic identities", 1.0, AlgebraicIdentities);
  report(2, "QP oracle equivalence", 30.0, QpOracles);

  const SweepRun sweep = RunSweepOnce(cfg);
  // Criteria 3 to 5 share one sweep; each is charged its full time.
  report(3, "relaxation dominance", 300.0,
         [&] { return Dominance(sweep); }, sweep.seconds);
  report(4, "sweep statistics", 300.0,
         [&] { return Statistics(sweep); }, sweep.seconds);
  report(5, "bilinear violation bound", 300.0,
         [&] { return BilinearBound(sweep); }, sweep.seconds);

  std::string table;
  report(6, "selection time scaling", 120.0,
         [&] { return Scaling(cfg, &table); });
  report(7, "enumeration equivalence", 60.0, Enumeration);
  report(8, "MPC gating", 30.0, Gating);

  std::vector<MaxPushRow> maxpush;
  report(9, "push recovery ordering", 900.0, [&] {
    maxpush = run_maxpush(cfg);
    return PushOrdering(cfg, maxpush);
  });

  report(10, "determinism", 1800.0, [&] {
    const SweepRun again = RunSweepOnce(cfg);
    std::ostringstream b1;
    std::ostringstream b2;
    write_bench_instances_csv(b1, cfg.bench, cfg.scenario.contact,
                              cfg.scenario.seed);
    write_bench_instances_csv(b2, cfg.bench, cfg.scenario.contact,
                              cfg.scenario.seed);
    std::ostringstream m1;
    std::ostringstream m2;
    write_maxpush_csv(m1, maxpush);
    // The repeat runs single-threaded, which also rules out any
    // dependence on scheduling.
    write_maxpush_csv(m2, run_maxpush_serial(cfg));
    const bool s = again.csv == sweep.csv && !sweep.csv.empty();
    const bool b = b1.str() == b2.str() && !b1.str().empty();
    const bool m = m1.str() == m2.str() && !maxpush.empty();
    return Outcome{s && b && m,
                   Format("sweep CSV %zu bytes identical %s, bench instance "
                          "CSV %zu bytes identical %s, maxpush CSV %zu bytes "
                          "identical %s",
                          sweep.csv.size(), s ? "yes" : "no", b1.str().size(),
                          b ? "yes" : "no", m1.str().size(),
                          m ? "yes" : "no")};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
