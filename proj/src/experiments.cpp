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

#include "hcmpc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

#include "hcmpc/random.hpp"

namespace hcmpc {
namespace {

// Seed-stream offsets keep the experiment families apart.
constexpr std::uint64_t kBenchStream = 1ULL << 40;
constexpr std::uint64_t kInContactStream = 2ULL << 40;

// Attempts before a bench instance gives up on a feasible contact.
constexpr int kMaxContactDraws = 10000;

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 GaussianVector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return Vec3(x, y, z);
}

double GridValue(int i, int points, double range) {
  if (points == 1) return 0.0;
  return -range + 2.0 * range * i / (points - 1);
}

template <typename Fn>
void ParallelFor(std::int64_t count, bool parallel, Fn&& fn) {
  if (!parallel) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(hcmpc_experiments_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<SweepCase> RunSweep(const SweepConfig& config,
                                const ContactSettings& settings,
                                std::uint64_t seed, std::int64_t samples,
                                bool parallel) {
  if (samples < 0) throw std::invalid_argument("negative sample count");
  std::vector<SweepCase> cases(samples);
  ParallelFor(samples, parallel, [&](std::int64_t i) {
    cases[i] = sweep_case(config, settings, seed, i);
  });
  return cases;
}

// Grid cell (n, k) is the first n requests and first k contacts of one
// master instance, so larger cells do a strict superset of the work.
std::vector<BenchInstance> BenchGrid(const BenchConfig& config,
                                     const ContactSettings& settings,
                                     std::uint64_t seed) {
  if (config.horizons.empty() || config.contact_counts.empty()) {
    throw std::invalid_argument("empty bench grid");
  }
  const int max_n =
      *std::max_element(config.horizons.begin(), config.horizons.end());
  const int max_k = *std::max_element(config.contact_counts.begin(),
                                      config.contact_counts.end());
  const BenchInstance master = make_bench_instance(
      settings, max_n, max_k, DeriveSeed(seed, kBenchStream));
  std::vector<BenchInstance> grid;
  for (int n : config.horizons) {
    for (int k : config.contact_counts) {
      BenchInstance inst;
      inst.horizon_steps = n;
      inst.delta_z.entries.assign(master.delta_z.entries.begin(),
                                  master.delta_z.entries.begin() + n);
      inst.states.assign(master.states.begin(), master.states.begin() + n);
      inst.contacts.assign(master.contacts.begin(),
                           master.contacts.begin() + k);
      grid.push_back(std::move(inst));
    }
  }
  return grid;
}

std::vector<MaxPushJob> MaxPushJobs(const MaxPushConfig& config) {
  std::vector<MaxPushJob> jobs;
  for (int v = 0; v < static_cast<int>(config.wall_y.size()); ++v) {
    for (int p = 0; p < config.phases; ++p) {
      for (bool hands : {false, true}) jobs.push_back({v, p, hands});
    }
  }
  return jobs;
}

std::vector<MaxPushRow> RunMaxPush(const ExperimentConfig& config,
                                   bool parallel) {
  const std::vector<MaxPushJob> jobs = MaxPushJobs(config.maxpush);
  std::vector<MaxPushRow> rows(jobs.size());
  ParallelFor(static_cast<std::int64_t>(jobs.size()), parallel,
              [&](std::int64_t i) {
                const MaxPushJob& job = jobs[i];
                MaxPushRow& row = rows[i];
                row.variant = variant_name(config.maxpush, job.variant);
                row.phase = job.phase;
                row.push_time = push_time(config.maxpush,
                                          config.scenario.gait, job.phase);
                row.hands = job.hands;
                row.max_impulse = max_recoverable_impulse(config, job);
              });
  return rows;
}

}  // namespace

// ---------------------------------------------------------------- sweep ---

ForceStepProblem sweep_problem(const SweepConfig& config,
                               const ContactSettings& settings,
                               std::uint64_t seed, std::int64_t index,
                               std::uint64_t* cone_seed) {
  const std::int64_t grid = config.grid_size();
  if (grid <= 0) throw std::invalid_argument("empty sweep grid");
  const std::int64_t cell = index % grid;
  const int p = config.dz_points;
  const int mu_index = static_cast<int>(cell / (p * p));
  const int ix = static_cast<int>((cell / p) % p);
  const int iy = static_cast<int>(cell % p);

  const std::uint64_t stream = DeriveSeed(seed, index);
  if (cone_seed) *cone_seed = stream;
  std::mt19937_64 rng(stream);

  LipmState state;
  state.c_ddot = Vec2(Uniform(rng, -config.accel_range, config.accel_range),
                      Uniform(rng, -config.accel_range, config.accel_range));
  // Outward normals face the robot, which stands on the -x side.
  Vec3 normal = GaussianVector(rng);
  while (normal.norm() < 1e-9) normal = GaussianVector(rng);
  normal.normalize();
  normal.x() = -std::abs(normal.x());
  Vec3 hint = GaussianVector(rng);
  if (hint.cross(normal).norm() < 1e-9) hint = Vec3::UnitZ();

  const ContactPoint contact = ContactPoint::FromNormal(
      config.contact_position, normal, config.mu_values[mu_index],
      config.f_n_max, 0, hint);
  const Vec2 dz(GridValue(ix, p, config.dz_range),
                GridValue(iy, p, config.dz_range));
  return ForceStepProblem::Make(state, dz, contact, settings);
}

SweepCase sweep_case(const SweepConfig& config,
                     const ContactSettings& settings, std::uint64_t seed,
                     std::int64_t index) {
  SweepCase out;
  out.index = index;
  const ForceStepProblem problem =
      sweep_problem(config, settings, seed, index, &out.cone_seed);
  out.mu = problem.contact.mu;
  out.delta_z = problem.delta_z;
  if (const auto qp1 = solve_qp1(problem)) {
    out.qp1_ok = true;
    out.qp1_force = qp1->force.norm();
    out.qp1_objective = qp1->objective;
  }
  if (const auto qp2 = solve_qp2(problem)) {
    out.qp2_ok = true;
    out.qp2_force = qp2->force.norm();
    out.qp2_objective = qp2->objective;
    out.bilinear_violation = qp2->bilinear_violation;
  }
  return out;
}

std::vector<SweepCase> run_sweep(const SweepConfig& config,
                                 const ContactSettings& settings,
                                 std::uint64_t seed, std::int64_t samples) {
  return RunSweep(config, settings, seed, samples, true);
}

std::vector<SweepCase> run_sweep_serial(const SweepConfig& config,
                                        const ContactSettings& settings,
                                        std::uint64_t seed,
                                        std::int64_t samples) {
  return RunSweep(config, settings, seed, samples, false);
}

SweepStats summarize_sweep(const std::vector<SweepCase>& cases,
                           const SweepConfig& config,
                           const ContactSettings& settings) {
  SweepStats stats;
  stats.samples = static_cast<std::int64_t>(cases.size());
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (const SweepCase& c : cases) {
    if (c.qp1_ok) {
      ++stats.qp1_success;
      sum1 += c.qp1_force;
    }
    if (c.qp2_ok) {
      ++stats.qp2_success;
      sum2 += c.qp2_force;
      stats.max_bilinear_violation =
          std::max(stats.max_bilinear_violation, c.bilinear_violation);
    }
    if (c.qp1_ok &&
        (!c.qp2_ok ||
         c.qp2_objective > c.qp1_objective + 1e-8 * (1.0 + c.qp1_objective))) {
      ++stats.dominance_violations;
    }
  }
  if (stats.qp1_success) stats.qp1_mean_force = sum1 / stats.qp1_success;
  if (stats.qp2_success) stats.qp2_mean_force = sum2 / stats.qp2_success;
  // The envelope gap depends only on the bounds and the contact height,
  // which every case shares.
  ContactPoint contact = ContactPoint::FromNormal(
      config.contact_position, -Vec3::UnitX(), 1.0, config.f_n_max, 0);
  stats.bilinear_bound = bilinear_gap_bound(
      ForceStepProblem::Make(LipmState{}, Vec2::Zero(), contact, settings));
  return stats;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCase>& cases) {
  out << "# hcmpc sweep schema 1\n";
  out << "mu,dz_x,dz_y,cone_seed,qp1_status,qp1_force_norm,qp2_status,"
         "qp2_force_norm,bilinear_violation\n";
  out << std::setprecision(10);
  for (const SweepCase& c : cases) {
    out << c.mu << ',' << c.delta_z.x() << ',' << c.delta_z.y() << ','
        << c.cone_seed << ',' << (c.qp1_ok ? "optimal" : "infeasible") << ','
        << c.qp1_force << ',' << (c.qp2_ok ? "optimal" : "infeasible") << ','
        << c.qp2_force << ',' << c.bilinear_violation << '\n';
  }
}

// ---------------------------------------------------------------- bench ---

BenchInstance make_bench_instance(const ContactSettings& settings,
                                  int horizon_steps, int num_contacts,
                                  std::uint64_t seed) {
  if (horizon_steps < 1 || num_contacts < 1) {
    throw std::invalid_argument("bench instance needs steps and contacts");
  }
  std::mt19937_64 rng(seed);
  BenchInstance inst;
  inst.horizon_steps = horizon_steps;
  for (int k = 1; k <= horizon_steps; ++k) {
    inst.delta_z.entries.push_back(
        {k, Vec2(Uniform(rng, -0.03, -0.005), Uniform(rng, -0.01, 0.01))});
    LipmState s;
    s.c = Vec2(Uniform(rng, -0.05, 0.05), Uniform(rng, -0.05, 0.05));
    s.c_ddot = Vec2(Uniform(rng, -1.0, 1.0), Uniform(rng, -1.0, 1.0));
    inst.states.push_back(s);
  }
  for (int id = 0; id < num_contacts; ++id) {
    bool accepted = false;
    for (int draw = 0; draw < kMaxContactDraws && !accepted; ++draw) {
      const Vec3 position(0.45, Uniform(rng, -0.3, 0.3),
                          Uniform(rng, 0.8, 1.3));
      const Vec3 normal =
          Vec3(-1.0, Uniform(rng, -0.3, 0.3), Uniform(rng, -0.3, 0.3))
              .normalized();
      const ContactPoint contact = ContactPoint::FromNormal(
          position, normal, Uniform(rng, 0.5, 1.0), 200.0, id);
      accepted = true;
      for (int k = 0; k < horizon_steps && accepted; ++k) {
        accepted = solve_qp2(ForceStepProblem::Make(
                                 inst.states[k],
                                 inst.delta_z.entries[k].delta_z, contact,
                                 settings))
                       .has_value();
      }
      if (accepted) inst.contacts.push_back(contact);
    }
    if (!accepted) throw std::runtime_error("no feasible bench contact found");
  }
  return inst;
}

TimingStats timing_stats(std::vector<double> samples_ms) {
  TimingStats out;
  if (samples_ms.empty()) return out;
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto at = [&](double q) {
    const double pos = q * (samples_ms.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, samples_ms.size() - 1);
    return samples_ms[lo] + (pos - lo) * (samples_ms[hi] - samples_ms[lo]);
  };
  out.median_ms = at(0.5);
  out.p90_ms = at(0.9);
  return out;
}

std::vector<BenchRow> run_bench(const BenchConfig& config,
                                const ContactSettings& settings,
                                std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const std::vector<BenchInstance> instances =
      BenchGrid(config, settings, seed);
  std::vector<BenchRow> rows;
  for (const BenchInstance& inst : instances) {
    rows.push_back({inst.horizon_steps,
                    static_cast<int>(inst.contacts.size()), 0.0, 0.0, "ok"});
  }
  const auto time_once = [&](std::size_t cell) {
    const BenchInstance& inst = instances[cell];
    const auto start = Clock::now();
    try {
      select_contact_serial(inst.delta_z, inst.states, inst.contacts,
                            settings);
    } catch (const NoContactFeasible&) {
      rows[cell].status = "infeasible";
    }
    return std::chrono::duration<double, std::milli>(Clock::now() - start)
        .count();
  };
  // Repetitions go round-robin over the cells, after one untimed pass, so
  // slow drift in machine speed affects every cell alike.
  for (std::size_t cell = 0; cell < rows.size(); ++cell) time_once(cell);
  std::vector<std::vector<double>> times(rows.size());
  for (int r = 0; r < config.repetitions; ++r) {
    for (std::size_t cell = 0; cell < rows.size(); ++cell) {
      times[cell].push_back(time_once(cell));
    }
  }
  for (std::size_t cell = 0; cell < rows.size(); ++cell) {
    const TimingStats t = timing_stats(std::move(times[cell]));
    rows[cell].median_ms = t.median_ms;
    rows[cell].p90_ms = t.p90_ms;
  }
  return rows;
}

TimingStats time_in_contact_force(const ContactSettings& settings,
                                  int repetitions, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> times;
  times.reserve(std::max(repetitions, 0));
  for (int r = 0; r < repetitions; ++r) {
    const BenchInstance inst = make_bench_instance(
        settings, 1, 1, DeriveSeed(seed, kInContactStream + r));
    const auto start = Clock::now();
    in_contact_force(inst.states[0], inst.delta_z.entries[0].delta_z,
                     inst.contacts[0], settings);
    times.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - start)
            .count());
  }
  return timing_stats(std::move(times));
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "# hcmpc bench schema 1\n";
  out << "horizon_steps,num_contacts,median_ms,p90_ms,status\n";
  out << std::setprecision(6);
  for (const BenchRow& r : rows) {
    out << r.horizon_steps << ',' << r.num_contacts << ',' << r.median_ms
        << ',' << r.p90_ms << ',' << r.status << '\n';
  }
}

void write_bench_instances_csv(std::ostream& out, const BenchConfig& config,
                               const ContactSettings& settings,
                               std::uint64_t seed) {
  out << "# hcmpc bench instances schema 1\n";
  out << "horizon_steps,num_contacts,contact_id,px,py,pz,nx,ny,nz,mu\n";
  out << std::setprecision(17);
  for (const BenchInstance& inst : BenchGrid(config, settings, seed)) {
    for (const ContactPoint& c : inst.contacts) {
      const Vec3 nrm = c.normal();
      out << inst.horizon_steps << ',' << inst.contacts.size() << ',' << c.id
          << ',' << c.position.x() << ',' << c.position.y() << ','
          << c.position.z() << ',' << nrm.x() << ',' << nrm.y() << ','
          << nrm.z() << ',' << c.mu << '\n';
    }
  }
}

// -------------------------------------------------------------- maxpush ---

std::string variant_name(const MaxPushConfig& config, int variant) {
  if (variant >= 0 && variant < static_cast<int>(config.variant_names.size())) {
    return config.variant_names[variant];
  }
  return "variant-" + std::to_string(variant);
}

double push_time(const MaxPushConfig& config, const GaitSchedule& gait,
                 int phase) {
  // Phases spread evenly over one step: a double support phase followed by
  // a single support phase.
  const double step = gait.ss_duration + gait.ds_duration;
  return config.cycle_start + step * phase / config.phases;
}

Scenario maxpush_scenario(const ExperimentConfig& config, int variant,
                          bool hands) {
  Scenario s = config.scenario;
  s.pushes.clear();
  WallSpec wall = config.wall.value_or(WallSpec{});
  wall.y = config.maxpush.wall_y.at(variant);
  add_wall(wall, &s);
  if (!hands) s.contacts.clear();
  return s;
}

bool recovers(const ExperimentConfig& config, const MaxPushJob& job,
              double impulse) {
  const MaxPushConfig& mp = config.maxpush;
  Scenario s = maxpush_scenario(config, job.variant, job.hands);
  const double t = push_time(mp, s.gait, job.phase);
  s.duration = t + mp.push_duration + mp.recovery_time;
  Simulator sim(std::move(s));
  sim.AddPush({t, Vec2(0.0, mp.push_direction_y * impulse), mp.push_duration});
  sim.Run();
  return !sim.fallen();
}

double max_recoverable_impulse(const ExperimentConfig& config,
                               const MaxPushJob& job) {
  const MaxPushConfig& mp = config.maxpush;
  if (!(mp.resolution > 0.0) || !(mp.max_impulse >= 0.0)) {
    throw std::invalid_argument("invalid maxpush search grid");
  }
  Scenario s = maxpush_scenario(config, job.variant, job.hands);
  const double t = push_time(mp, s.gait, job.phase);
  s.duration = t + mp.push_duration + mp.recovery_time;
  // Everything before the push is shared by all probes of this job.
  Simulator snapshot(std::move(s));
  snapshot.RunUntil(t);
  if (snapshot.fallen()) return 0.0;
  const auto survives = [&](long level) {
    Simulator sim = snapshot;
    sim.AddPush({t, Vec2(0.0, mp.push_direction_y * level * mp.resolution),
                 mp.push_duration});
    sim.Run();
    return !sim.fallen();
  };
  const long top = static_cast<long>(std::floor(mp.max_impulse / mp.resolution + 1e-9));
  if (survives(top)) return top * mp.resolution;
  if (!survives(0)) return 0.0;
  long lo = 0;  // survives
  long hi = top;  // falls
  while (hi - lo > 1) {
    const long mid = (lo + hi) / 2;
    (survives(mid) ? lo : hi) = mid;
  }
  return lo * mp.resolution;
}

std::vector<MaxPushRow> run_maxpush(const ExperimentConfig& config) {
  return RunMaxPush(config, true);
}

std::vector<MaxPushRow> run_maxpush_serial(const ExperimentConfig& config) {
  return RunMaxPush(config, false);
}

std::vector<MaxPushSummary> summarize_maxpush(
    const ExperimentConfig& config, const std::vector<MaxPushRow>& rows) {
  std::vector<MaxPushSummary> out;
  for (int v = 0; v < static_cast<int>(config.maxpush.wall_y.size()); ++v) {
    MaxPushSummary s;
    s.variant = variant_name(config.maxpush, v);
    double on = 0.0;
    double off = 0.0;
    int n_on = 0;
    int n_off = 0;
    for (const MaxPushRow& r : rows) {
      if (r.variant != s.variant) continue;
      if (r.hands) {
        on += r.max_impulse;
        ++n_on;
      } else {
        off += r.max_impulse;
        ++n_off;
      }
    }
    s.mean_with = n_on ? on / n_on : 0.0;
    s.mean_without = n_off ? off / n_off : 0.0;
    s.improvement = off > 0.0 ? (on - off) / off : 0.0;
    out.push_back(s);
  }
  return out;
}

void write_maxpush_csv(std::ostream& out, const std::vector<MaxPushRow>& rows) {
  out << "# hcmpc maxpush schema 1\n";
  out << "variant,phase,hands,max_impulse_ns\n";
  out << std::setprecision(10);
  for (const MaxPushRow& r : rows) {
    out << r.variant << ',' << r.phase << ','
        << (r.hands ? "on" : "off") << ',' << r.max_impulse << '\n';
  }
}

// ----------------------------------------------------------------- walk ---

void write_trace_csv(std::ostream& out, const std::vector<TickRecord>& trace) {
  out << "# hcmpc trace schema 1\n";
  out << "t,cx,cy,cdx,cdy,cddx,cddy,zmp_x,zmp_y,zmp_hand_x,zmp_hand_y,"
         "slack_norm,dz_x,dz_y,contact_id,fcmd_x,fcmd_y,fcmd_z,"
         "freal_x,freal_y,freal_z,fallen\n";
  out << std::setprecision(10);
  for (const TickRecord& r : trace) {
    const LipmState& s = r.state;
    out << r.t << ',' << s.c.x() << ',' << s.c.y() << ',' << s.c_dot.x()
        << ',' << s.c_dot.y() << ',' << s.c_ddot.x() << ',' << s.c_ddot.y()
        << ',' << r.zmp_lipm.x() << ',' << r.zmp_lipm.y() << ','
        << r.zmp_hand.x() << ',' << r.zmp_hand.y() << ',' << r.slack_norm
        << ',' << r.delta_z.x() << ',' << r.delta_z.y() << ','
        << r.contact_id << ','
        << r.force_command.x() << ',' << r.force_command.y() << ','
        << r.force_command.z() << ',' << r.force_realized.x() << ','
        << r.force_realized.y() << ',' << r.force_realized.z() << ','
        << int(r.fallen) << '\n';
  }
}

}  // namespace hcmpc
