// Copyright 2026 The wt_empc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: closed-loop simulation, experiments, envelope
// export and model validation.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "wt_empc/config.h"
#include "wt_empc/experiments.h"
#include "wt_empc/export.h"
#include "wt_empc/pwl_envelope.h"
#include "wt_empc/simulation.h"
#include "wt_empc/validation.h"

namespace {

using namespace wt_empc;

ScenarioConfig Load(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : LoadConfig(path);
}

std::vector<double> PlateauSpeeds(const ScenarioConfig& config) {
  std::vector<double> speeds;
  for (const auto& p : config.wind.Build().plateaus())
    speeds.push_back(p.speed);
  return speeds;
}

void PrintPlateaus(const std::string& label, const Metrics& m) {
  std::printf("%s\n  wind [m/s]  P_g [MW]  rms v_p [m/s]\n", label.c_str());
  for (const auto& p : m.plateaus) {
    std::printf("  %9.2f  %8.4f ", p.speed, p.steady_gen_power / 1e6);
    for (int l = 0; l < p.rms_velocity.size(); ++l) {
      std::printf(" %.5f", p.rms_velocity(l));
    }
    std::printf("\n");
  }
  std::printf(
      "  energy %.4g J, mean solve %.1f ms, max solve %.1f ms, holds %d\n",
      m.energy_captured, 1e3 * m.mean_solve_time, 1e3 * m.max_solve_time,
      m.hold_steps);
}

int Simulate(const std::string& config_path, const std::string& out) {
  const ScenarioConfig config = Load(config_path);
  const SimulationSetup setup = MakeSetup(config);
  const SimLog log =
      RunSimulation(setup, config.wind.Build(), config.simulation.Options());
  const Metrics metrics = ComputeMetrics(log, config.simulation.Windows());
  ExportRun(out, log, metrics);
  PrintPlateaus("simulate", metrics);
  if (!log.completed) {
    std::fprintf(stderr, "run aborted: %s\n", log.diagnostic.c_str());
    return 2;
  }
  return 0;
}

int Compare(const std::string& config_path, const std::string& variants,
            const std::string& out) {
  const ScenarioConfig config = Load(config_path);
  std::vector<ControllerVariant> list;
  std::string item;
  for (std::size_t start = 0; start <= variants.size();) {
    const std::size_t comma = variants.find(',', start);
    item = variants.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) list.push_back(ParseVariant(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (list.size() < 2) throw std::invalid_argument("need two or more variants");
  const ComparisonReport report = CompareControllers(config, list);
  WriteReport(out, report);
  for (const auto& r : report.runs) PrintPlateaus(r.label, r.metrics);
  for (const auto& c : report.comparisons) {
    std::printf("%s vs %s: pooled transient rms reduction", c.label.c_str(),
                c.baseline.c_str());
    for (int l = 0; l < c.pooled_reduction.size(); ++l) {
      std::printf(" %.1f%%", 100.0 * c.pooled_reduction(l));
    }
    std::printf("\n");
  }
  return 0;
}

int Sweep(const std::string& config_path, const std::vector<int>& values,
          const std::string& out) {
  const ScenarioConfig config = Load(config_path);
  const NpSweepReport report = NpSweep(config, values);
  WriteReport(out, report);
  for (std::size_t k = 0; k < report.runs.size(); ++k) {
    std::printf("N_p=%d: mean solve %.1f ms, max plateau deviation %.3f%%\n",
                report.horizons[k],
                1e3 * report.runs[k].metrics.mean_solve_time,
                100.0 * report.max_power_deviation[k]);
  }
  return 0;
}

int Ablation(const std::string& config_path, double speed, double duration,
             const std::string& out) {
  const ScenarioConfig config = Load(config_path);
  const TerminalAblationReport report =
      TerminalAblation(config, speed, duration);
  WriteReport(out, report);
  PrintPlateaus("with terminal constraint", report.with_terminal.metrics);
  PrintPlateaus("without terminal constraint", report.without_terminal.metrics);
  std::printf("constant %.1f m/s: P_g %.4f MW with, %.4f MW without\n",
              report.constant_speed, report.constant_power_with / 1e6,
              report.constant_power_without / 1e6);
  return 0;
}

int FitPwl(const std::string& config_path, const std::string& path,
           bool thrust) {
  const ScenarioConfig config = Load(config_path);
  const SimulationSetup setup = MakeSetup(config);
  auto out = OpenForWrite(path);
  WritePwlCsv(
      out, thrust ? *setup.tables.max_thrust : *setup.tables.available_power);
  return 0;
}

int Validate(const std::string& config_path) {
  const ScenarioConfig config = Load(config_path);
  const SimulationSetup setup = MakeSetup(config);
  bool ok = true;
  for (const CheckResult& r : RunValidation(setup, PlateauSpeeds(config))) {
    std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Economic MPC for wind turbine tower load reduction"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out = "out";
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* sim = app.add_subcommand("simulate", "Closed-loop run of one scenario");
  sim->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory");

  std::string variants = "no-damping,single-mode,multi-mode";
  auto* cmp = app.add_subcommand("compare", "Controller variants side by side");
  cmp->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);
  cmp->add_option("--variants", variants,
                  "Comma separated; the first is the baseline");
  cmp->add_option("--out", out, "Output directory");

  std::vector<int> horizons = {50, 100, 200};
  auto* sweep = app.add_subcommand("np-sweep", "Prediction horizon sweep");
  sweep->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);
  sweep->add_option("--values", horizons, "Horizons, comma separated")
      ->delimiter(',');
  sweep->add_option("--out", out, "Output directory");

  double speed = 16.0, duration = 300.0;
  auto* abl = app.add_subcommand("terminal-ablation",
                                 "With and without the terminal constraint");
  abl->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);
  abl->add_option("--constant-speed", speed, "m/s");
  abl->add_option("--constant-duration", duration, "s");
  abl->add_option("--out", out, "Output directory");

  std::string export_path;
  bool thrust = false;
  auto* fit = app.add_subcommand("fit-pwl", "Export the PWL envelope cuts");
  fit->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);
  fit->add_option("--export", export_path, "CSV file")->required();
  fit->add_flag("--thrust", thrust, "Thrust envelope instead of power");

  auto* val = app.add_subcommand("validate-model", "Run the invariant checks");
  val->add_option("--config", config_path, "INI scenario file")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*sim) return Simulate(config_path, out);
    if (*cmp) return Compare(config_path, variants, out);
    if (*sweep) return Sweep(config_path, horizons, out);
    if (*abl) return Ablation(config_path, speed, duration, out);
    if (*fit) return FitPwl(config_path, export_path, thrust);
    if (*val) return Validate(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
