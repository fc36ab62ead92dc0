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

// Serial reference versus OpenMP kernels. Set OMP_NUM_THREADS to vary the
// worker count; on a single core both variants should take the same time.

#include <benchmark/benchmark.h>

#include "hcmpc/config.hpp"
#include "hcmpc/contact.hpp"
#include "hcmpc/experiments.hpp"

namespace hcmpc {
namespace {

void BM_SelectContact(benchmark::State& state, bool parallel) {
  const ContactSettings settings;
  const BenchInstance inst = make_bench_instance(
      settings, static_cast<int>(state.range(0)),
      static_cast<int>(state.range(1)), 17);
  for (auto _ : state) {
    ContactPlan plan =
        parallel ? select_contact(inst.delta_z, inst.states, inst.contacts,
                                  settings)
                 : select_contact_serial(inst.delta_z, inst.states,
                                         inst.contacts, settings);
    benchmark::DoNotOptimize(plan);
  }
  state.SetComplexityN(state.range(1));
}
BENCHMARK_CAPTURE(BM_SelectContact, serial, false)
    ->ArgsProduct({{4, 16}, {5, 10, 20, 40}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SelectContact, parallel, true)
    ->ArgsProduct({{4, 16}, {5, 10, 20, 40}})
    ->Unit(benchmark::kMillisecond);

void BM_InContactForce(benchmark::State& state) {
  const ContactSettings settings;
  const BenchInstance inst = make_bench_instance(settings, 1, 1, 23);
  for (auto _ : state) {
    InContactForce f = in_contact_force(
        inst.states[0], inst.delta_z.entries[0].delta_z, inst.contacts[0],
        settings);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_InContactForce)->Unit(benchmark::kMicrosecond);

void BM_Sweep(benchmark::State& state, bool parallel) {
  const SweepConfig config;
  const ContactSettings settings;
  for (auto _ : state) {
    auto cases = parallel
                     ? run_sweep(config, settings, 1, state.range(0))
                     : run_sweep_serial(config, settings, 1, state.range(0));
    benchmark::DoNotOptimize(cases);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Sweep, serial, false)
    ->Arg(10000)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Sweep, parallel, true)
    ->Arg(10000)
    ->Unit(benchmark::kMillisecond);

// One variant at a coarse resolution keeps an iteration to a few seconds.
void BM_MaxPush(benchmark::State& state, bool parallel) {
  ExperimentConfig cfg;
  cfg.maxpush.wall_y = {0.45};
  cfg.maxpush.phases = 2;
  cfg.maxpush.resolution = 4.0;
  cfg.maxpush.max_impulse = 40.0;
  for (auto _ : state) {
    auto rows = parallel ? run_maxpush(cfg) : run_maxpush_serial(cfg);
    benchmark::DoNotOptimize(rows);
  }
}
BENCHMARK_CAPTURE(BM_MaxPush, serial, false)
    ->Iterations(1)
    ->Unit(benchmark::kSecond);
BENCHMARK_CAPTURE(BM_MaxPush, parallel, true)
    ->Iterations(1)
    ->Unit(benchmark::kSecond);

}  // namespace
}  // namespace hcmpc

BENCHMARK_MAIN();
