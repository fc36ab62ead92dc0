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

#ifndef HCMPC_EXPERIMENTS_HPP_
#define HCMPC_EXPERIMENTS_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hcmpc/config.hpp"
#include "hcmpc/contact.hpp"
#include "hcmpc/sim.hpp"

// Batch experiments behind the command line tool. Every randomized case
// draws from its own stream derived from (master seed, case index), so
// results do not depend on the number of worker threads.

namespace hcmpc {

// ---------------------------------------------------------------- sweep ---

struct SweepCase {
  std::int64_t index = 0;
  double mu = 0.0;
  Vec2 delta_z = Vec2::Zero();
  std::uint64_t cone_seed = 0;
  bool qp1_ok = false;
  double qp1_force = 0.0;  // world force norm [N]
  double qp1_objective = 0.0;
  bool qp2_ok = false;
  double qp2_force = 0.0;
  double qp2_objective = 0.0;
  double bilinear_violation = 0.0;  // [N]
};

struct SweepStats {
  std::int64_t samples = 0;
  std::int64_t qp1_success = 0;
  std::int64_t qp2_success = 0;
  double qp1_mean_force = 0.0;  // over successes [N]
  double qp2_mean_force = 0.0;
  // Cases where QP1 succeeded but QP2 failed or cost more than 1e-8 extra.
  std::int64_t dominance_violations = 0;
  double max_bilinear_violation = 0.0;  // [N]
  double bilinear_bound = 0.0;          // analytic envelope gap [N]

  double qp1_rate() const { return samples ? double(qp1_success) / samples : 0; }
  double qp2_rate() const { return samples ? double(qp2_success) / samples : 0; }
};

// The force problem of case `index`: grid cell index % grid_size, random
// contact frame and CoM acceleration from the derived stream.
ForceStepProblem sweep_problem(const SweepConfig& config,
                               const ContactSettings& settings,
                               std::uint64_t seed, std::int64_t index,
                               std::uint64_t* cone_seed = nullptr);
SweepCase sweep_case(const SweepConfig& config,
                     const ContactSettings& settings, std::uint64_t seed,
                     std::int64_t index);

std::vector<SweepCase> run_sweep(const SweepConfig& config,
                                 const ContactSettings& settings,
                                 std::uint64_t seed, std::int64_t samples);
std::vector<SweepCase> run_sweep_serial(const SweepConfig& config,
                                        const ContactSettings& settings,
                                        std::uint64_t seed,
                                        std::int64_t samples);

SweepStats summarize_sweep(const std::vector<SweepCase>& cases,
                           const SweepConfig& config,
                           const ContactSettings& settings);

void write_sweep_csv(std::ostream& out, const std::vector<SweepCase>& cases);

// ---------------------------------------------------------------- bench ---

struct BenchInstance {
  int horizon_steps = 0;
  DeltaZTrajectory delta_z;
  std::vector<LipmState> states;
  std::vector<ContactPoint> contacts;
};

// Random instance in which every contact is feasible at every step, so each
// candidate costs a full set of step solves.
BenchInstance make_bench_instance(const ContactSettings& settings,
                                  int horizon_steps, int num_contacts,
                                  std::uint64_t seed);

struct BenchRow {
  int horizon_steps = 0;
  int num_contacts = 0;
  double median_ms = 0.0;
  double p90_ms = 0.0;
  std::string status;
};

struct TimingStats {
  double median_ms = 0.0;
  double p90_ms = 0.0;
};

TimingStats timing_stats(std::vector<double> samples_ms);

// Times the serial enumeration (the per-candidate cost the scaling law is
// about) over the configured grid.
std::vector<BenchRow> run_bench(const BenchConfig& config,
                                const ContactSettings& settings,
                                std::uint64_t seed);
// Single-step in-contact force solves on random feasible requests.
TimingStats time_in_contact_force(const ContactSettings& settings,
                                  int repetitions, std::uint64_t seed);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
// Instance parameters only, free of timings; identical for identical seeds.
void write_bench_instances_csv(std::ostream& out,
                               const BenchConfig& config,
                               const ContactSettings& settings,
                               std::uint64_t seed);

// -------------------------------------------------------------- maxpush ---

struct MaxPushJob {
  int variant = 0;
  int phase = 0;
  bool hands = false;
};

struct MaxPushRow {
  std::string variant;
  int phase = 0;
  double push_time = 0.0;
  bool hands = false;
  double max_impulse = 0.0;  // [N s]
};

struct MaxPushSummary {
  std::string variant;
  double mean_without = 0.0;
  double mean_with = 0.0;
  // (sum with - sum without) / sum without over all phases.
  double improvement = 0.0;
};

std::string variant_name(const MaxPushConfig& config, int variant);
double push_time(const MaxPushConfig& config, const GaitSchedule& gait,
                 int phase);
// Scenario of one variant: the configured robot, the variant's wall
// standoff and, with hands, the wall contacts.
Scenario maxpush_scenario(const ExperimentConfig& config, int variant,
                          bool hands);

// Largest impulse on the resolution grid in [0, max_impulse] that the robot
// survives, found by bisection on a snapshot taken just before the push.
double max_recoverable_impulse(const ExperimentConfig& config,
                               const MaxPushJob& job);
bool recovers(const ExperimentConfig& config, const MaxPushJob& job,
              double impulse);

std::vector<MaxPushRow> run_maxpush(const ExperimentConfig& config);
std::vector<MaxPushRow> run_maxpush_serial(const ExperimentConfig& config);
std::vector<MaxPushSummary> summarize_maxpush(
    const ExperimentConfig& config, const std::vector<MaxPushRow>& rows);

void write_maxpush_csv(std::ostream& out, const std::vector<MaxPushRow>& rows);

// ----------------------------------------------------------------- walk ---

void write_trace_csv(std::ostream& out, const std::vector<TickRecord>& trace);

}  // namespace hcmpc

#endif  // HCMPC_EXPERIMENTS_HPP_
