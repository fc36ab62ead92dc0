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

// Command line front end: walk, sweep, bench and maxpush experiments.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hcmpc/config.hpp"
#include "hcmpc/experiments.hpp"
#include "hcmpc/plot.hpp"

namespace fs = std::filesystem;
using namespace hcmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

constexpr std::int64_t kFullScaleSamples = 2000000;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> samples;
  bool full_scale = false;
};

ExperimentConfig LoadOrDefault(const Options& opt) {
  ExperimentConfig cfg =
      opt.config.empty() ? parse_config("", "<defaults>")
                         : load_config(opt.config);
  if (opt.seed) cfg.scenario.seed = *opt.seed;
  return cfg;
}

fs::path OutputDir(const Options& opt) {
  fs::path dir(opt.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void RenderFromCsv(const fs::path& csv, const fs::path& svg,
                   void (*plot)(const CsvTable&, std::ostream&)) {
  std::ifstream in(csv);
  const CsvTable table = read_csv(in);
  std::ofstream out = OpenOut(svg);
  plot(table, out);
}

int Walk(const Options& opt) {
  const ExperimentConfig cfg = LoadOrDefault(opt);
  const fs::path dir = OutputDir(opt);
  Simulator sim(build_scenario(cfg));
  std::vector<TickRecord> trace;
  sim.Run(&trace);
  {
    std::ofstream out = OpenOut(dir / "trace.csv");
    write_trace_csv(out, trace);
  }
  RenderFromCsv(dir / "trace.csv", dir / "trace.svg", plot_trace);

  const SimSummary& s = sim.summary();
  std::ostringstream text;
  text << "fallen: " << (s.fallen ? "yes" : "no") << '\n';
  if (s.fallen) text << "fall_time_s: " << s.fall_time << '\n';
  text << "attachments: " << s.attachments << '\n';
  text << "contacts_used:";
  for (int id : s.contacts_used) text << ' ' << id;
  text << '\n';
  text << "max_slack_norm_m: " << s.max_slack_norm << '\n';
  text << "max_force_n: " << s.max_force_norm << '\n';
  text << "mpc_solves: " << s.mpc_solves << '\n';
  text << "hold_ticks: " << s.hold_ticks << '\n';
  std::cout << text.str();
  OpenOut(dir / "summary.txt") << text.str();
  return s.fallen ? kExitFailure : kExitOk;
}

int Sweep(const Options& opt) {
  const ExperimentConfig cfg = LoadOrDefault(opt);
  const fs::path dir = OutputDir(opt);
  std::int64_t samples = cfg.sweep.samples;
  if (opt.full_scale) samples = kFullScaleSamples;
  if (opt.samples) samples = *opt.samples;
  if (samples < 1) throw ConfigError("--samples", 0, "sample count must be >= 1");
  const auto cases =
      run_sweep(cfg.sweep, cfg.scenario.contact, cfg.scenario.seed, samples);
  {
    std::ofstream out = OpenOut(dir / "sweep.csv");
    write_sweep_csv(out, cases);
  }
  const SweepStats st =
      summarize_sweep(cases, cfg.sweep, cfg.scenario.contact);
  std::cout << std::fixed << std::setprecision(4)
            << "samples: " << st.samples << '\n'
            << "qp1_success_rate: " << st.qp1_rate() << '\n'
            << "qp1_mean_force_n: " << st.qp1_mean_force << '\n'
            << "qp2_success_rate: " << st.qp2_rate() << '\n'
            << "qp2_mean_force_n: " << st.qp2_mean_force << '\n'
            << "dominance_violations: " << st.dominance_violations << '\n'
            << std::setprecision(6)
            << "max_bilinear_violation_n: " << st.max_bilinear_violation
            << '\n'
            << "bilinear_bound_n: " << st.bilinear_bound << '\n';
  return kExitOk;
}

int Bench(const Options& opt) {
  const ExperimentConfig cfg = LoadOrDefault(opt);
  const fs::path dir = OutputDir(opt);
  const auto rows =
      run_bench(cfg.bench, cfg.scenario.contact, cfg.scenario.seed);
  {
    std::ofstream out = OpenOut(dir / "bench.csv");
    write_bench_csv(out, rows);
  }
  {
    std::ofstream out = OpenOut(dir / "bench_instances.csv");
    write_bench_instances_csv(out, cfg.bench, cfg.scenario.contact,
                              cfg.scenario.seed);
  }
  std::cout << "steps contacts median_ms p90_ms status\n";
  for (const BenchRow& r : rows) {
    std::cout << std::setw(5) << r.horizon_steps << std::setw(9)
              << r.num_contacts << std::fixed << std::setprecision(3)
              << std::setw(10) << r.median_ms << std::setw(8) << r.p90_ms
              << ' ' << r.status << '\n';
  }
  const TimingStats ic = time_in_contact_force(
      cfg.scenario.contact, cfg.bench.in_contact_repetitions,
      cfg.scenario.seed);
  std::cout << std::setprecision(4) << "in_contact_force median_ms "
            << ic.median_ms << " p90_ms " << ic.p90_ms << '\n';
  return kExitOk;
}

int MaxPush(const Options& opt) {
  const ExperimentConfig cfg = LoadOrDefault(opt);
  const fs::path dir = OutputDir(opt);
  const auto rows = run_maxpush(cfg);
  {
    std::ofstream out = OpenOut(dir / "maxpush.csv");
    write_maxpush_csv(out, rows);
  }
  RenderFromCsv(dir / "maxpush.csv", dir / "maxpush.svg", plot_maxpush);
  std::cout << "variant mean_off_ns mean_on_ns improvement\n";
  for (const MaxPushSummary& s : summarize_maxpush(cfg, rows)) {
    std::cout << s.variant << std::fixed << std::setprecision(2) << ' '
              << s.mean_without << ' ' << s.mean_with << ' '
              << std::setprecision(1) << 100.0 * s.improvement << "%\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Footstep MPC with hand contact planning"};
  app.require_subcommand(1);
  Options opt;
  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config, "Experiment configuration file");
    cmd->add_option("--out", opt.out, "Output directory")
        ->capture_default_str();
    cmd->add_option("--seed", opt.seed, "Master seed");
  };
  CLI::App* walk = app.add_subcommand("walk", "Closed-loop walking run");
  CLI::App* sweep = app.add_subcommand("sweep", "QP1 versus QP2 sweep");
  CLI::App* bench = app.add_subcommand("bench", "Contact selection timing");
  CLI::App* maxpush =
      app.add_subcommand("maxpush", "Maximum recoverable impulse search");
  for (CLI::App* cmd : {walk, sweep, bench, maxpush}) common(cmd);
  sweep->add_option("--samples", opt.samples, "Number of sweep cases");
  sweep->add_flag("--full-scale", opt.full_scale,
                  "Use the full 2,000,000 case sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*walk) return Walk(opt);
    if (*sweep) return Sweep(opt);
    if (*bench) return Bench(opt);
    if (*maxpush) return MaxPush(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
