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

#include "wt_empc/experiments.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "wt_empc/export.h"

namespace wt_empc {
namespace {

std::vector<double> ToVector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

RunSpec MakeSpec(const std::string& label, const SimulationSetup& setup,
                 const WindProfile& wind, const ScenarioConfig& scenario) {
  return {label, setup, wind, scenario.simulation.Options()};
}

nlohmann::json RunSummary(const RunResult& r) {
  nlohmann::json j = MetricsToJson(r.metrics);
  j["label"] = r.label;
  j["wall_time_s"] = r.wall_time;
  j["completed"] = r.log.completed;
  if (!r.log.diagnostic.empty()) j["diagnostic"] = r.log.diagnostic;
  return j;
}

void WriteJson(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = OpenForWrite(path.string());
  out << j.dump(2) << '\n';
}

void WriteOverlay(const std::filesystem::path& path,
                  const std::vector<LabeledLog>& runs,
                  const std::string& signal) {
  auto out = OpenForWrite(path.string());
  WriteOverlayCsv(out, runs, signal);
}

std::filesystem::path MakeDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  return std::filesystem::path(dir);
}

double SettledPower(const RunResult& r) {
  return r.metrics.plateaus.empty()
             ? 0.0
             : r.metrics.plateaus.back().steady_gen_power;
}

}  // namespace

int MaxParallelRuns() {
  if (const char* env = std::getenv("WT_EMPC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    spdlog::warn("ignoring WT_EMPC_THREADS='{}'", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunResult> RunBatch(const std::vector<RunSpec>& specs,
                                const MetricWindows& windows,
                                int max_parallel) {
  if (max_parallel <= 0) max_parallel = MaxParallelRuns();
  std::vector<RunResult> results(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < specs.size(); k = next++) {
      const RunSpec& spec = specs[k];
      RunResult& r = results[k];
      r.label = spec.label;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        r.log = RunSimulation(spec.setup, spec.wind, spec.options);
      } catch (const std::exception& e) {
        r.log.completed = false;
        r.log.diagnostic = e.what();
      }
      r.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      r.metrics = ComputeMetrics(r.log, windows);
      spdlog::info("run '{}' finished in {:.1f} s", r.label, r.wall_time);
    }
  };
  const int threads =
      std::min<int>(max_parallel, static_cast<int>(specs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

Eigen::VectorXd PooledTransientRms(const SimLog& log,
                                   const MetricWindows& windows) {
  const int nl = static_cast<int>(log.locations.size());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(nl);
  int count = 0;
  for (std::size_t k = 1; k < log.plateaus.size(); ++k) {
    const WindPlateau& p = log.plateaus[k];
    const double to = std::min(p.end, p.start + windows.transient);
    for (const SimRecord& r : log.records) {
      if (r.t < p.start - 1e-9 || r.t >= to - 1e-9) continue;
      sq += r.v_p.cwiseAbs2();
      ++count;
    }
  }
  if (count == 0) return sq;
  return (sq / count).cwiseSqrt();
}

Comparison CompareRuns(const RunResult& run, const RunResult& baseline,
                       const MetricWindows& windows) {
  Comparison c;
  c.label = run.label;
  c.baseline = baseline.label;
  const auto& a = run.metrics.plateaus;
  const auto& b = baseline.metrics.plateaus;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
    PlateauComparison pc;
    pc.speed = a[k].speed;
    pc.gen_power_delta = b[k].steady_gen_power != 0.0
                             ? (a[k].steady_gen_power - b[k].steady_gen_power) /
                                   b[k].steady_gen_power
                             : 0.0;
    pc.rms_ratio =
        a[k].rms_velocity.cwiseQuotient(b[k].rms_velocity.cwiseMax(1e-300));
    c.plateaus.push_back(pc);
  }
  c.pooled_rms = PooledTransientRms(run.log, windows);
  c.pooled_rms_baseline = PooledTransientRms(baseline.log, windows);
  c.pooled_reduction =
      Eigen::VectorXd::Ones(c.pooled_rms.size()) -
      c.pooled_rms.cwiseQuotient(c.pooled_rms_baseline.cwiseMax(1e-300));
  return c;
}

ComparisonReport CompareControllers(
    const ScenarioConfig& scenario,
    const std::vector<ControllerVariant>& variants) {
  const SimulationSetup base = MakeSetup(scenario);
  const WindProfile wind = scenario.wind.Build();
  std::vector<RunSpec> specs;
  for (ControllerVariant v : variants) {
    SimulationSetup s = base;
    s.controller.variant = v;
    specs.push_back(MakeSpec(ToString(v), s, wind, scenario));
  }
  ComparisonReport report;
  const MetricWindows windows = scenario.simulation.Windows();
  report.runs = RunBatch(specs, windows);
  for (std::size_t k = 1; k < report.runs.size(); ++k) {
    report.comparisons.push_back(
        CompareRuns(report.runs[k], report.runs[0], windows));
  }
  return report;
}

NpSweepReport NpSweep(const ScenarioConfig& scenario,
                      const std::vector<int>& horizons) {
  const SimulationSetup base = MakeSetup(scenario);
  const WindProfile wind = scenario.wind.Build();
  std::vector<RunSpec> specs;
  for (int n : horizons) {
    SimulationSetup s = base;
    s.controller.horizon = n;
    specs.push_back(MakeSpec("Np=" + std::to_string(n), s, wind, scenario));
  }
  NpSweepReport report;
  report.horizons = horizons;
  report.runs = RunBatch(specs, scenario.simulation.Windows());
  std::size_t ref = 0;
  for (std::size_t k = 1; k < horizons.size(); ++k) {
    if (horizons[k] > horizons[ref]) ref = k;
  }
  for (const RunResult& r : report.runs) {
    double worst = 0.0;
    const auto& a = r.metrics.plateaus;
    const auto& b = report.runs[ref].metrics.plateaus;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      if (b[k].steady_gen_power == 0.0) continue;
      worst = std::max(worst,
                       std::abs(a[k].steady_gen_power - b[k].steady_gen_power) /
                           b[k].steady_gen_power);
    }
    report.max_power_deviation.push_back(worst);
  }
  return report;
}

TerminalAblationReport TerminalAblation(const ScenarioConfig& scenario,
                                        double constant_speed,
                                        double constant_duration) {
  const SimulationSetup base = MakeSetup(scenario);
  SimulationSetup with = base, without = base;
  with.controller.terminal_constraint = true;
  without.controller.terminal_constraint = false;
  const WindProfile wind = scenario.wind.Build();
  const WindProfile constant =
      WindProfile::Constant(constant_speed, constant_duration);
  const std::vector<RunSpec> specs = {
      MakeSpec("terminal", with, wind, scenario),
      MakeSpec("no-terminal", without, wind, scenario),
      MakeSpec("terminal-constant", with, constant, scenario),
      MakeSpec("no-terminal-constant", without, constant, scenario)};
  auto runs = RunBatch(specs, scenario.simulation.Windows());
  TerminalAblationReport r;
  r.with_terminal = std::move(runs[0]);
  r.without_terminal = std::move(runs[1]);
  r.constant_with = std::move(runs[2]);
  r.constant_without = std::move(runs[3]);
  r.constant_speed = constant_speed;
  r.constant_power_with = SettledPower(r.constant_with);
  r.constant_power_without = SettledPower(r.constant_without);
  return r;
}

nlohmann::json ToJson(const ComparisonReport& report) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs) j["runs"].push_back(RunSummary(r));
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    nlohmann::json cj;
    cj["label"] = c.label;
    cj["baseline"] = c.baseline;
    cj["pooled_transient_rms_v_p"] = ToVector(c.pooled_rms);
    cj["pooled_transient_rms_v_p_baseline"] = ToVector(c.pooled_rms_baseline);
    cj["pooled_reduction"] = ToVector(c.pooled_reduction);
    cj["plateaus"] = nlohmann::json::array();
    for (const auto& p : c.plateaus) {
      cj["plateaus"].push_back({{"wind_m_s", p.speed},
                                {"gen_power_delta_rel", p.gen_power_delta},
                                {"rms_v_p_ratio", ToVector(p.rms_ratio)}});
    }
    j["comparisons"].push_back(cj);
  }
  return j;
}

nlohmann::json ToJson(const NpSweepReport& report) {
  nlohmann::json j;
  j["horizons"] = report.horizons;
  j["max_power_deviation_rel"] = report.max_power_deviation;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs) j["runs"].push_back(RunSummary(r));
  return j;
}

nlohmann::json ToJson(const TerminalAblationReport& report) {
  nlohmann::json j;
  j["with_terminal"] = RunSummary(report.with_terminal);
  j["without_terminal"] = RunSummary(report.without_terminal);
  j["constant_wind_m_s"] = report.constant_speed;
  j["constant_gen_power_with_W"] = report.constant_power_with;
  j["constant_gen_power_without_W"] = report.constant_power_without;
  j["constant_with"] = RunSummary(report.constant_with);
  j["constant_without"] = RunSummary(report.constant_without);
  return j;
}

void WriteReport(const std::string& dir, const ComparisonReport& report) {
  const auto base = MakeDir(dir);
  WriteJson(base / "compare.json", ToJson(report));
  std::vector<LabeledLog> logs;
  for (const auto& r : report.runs) logs.push_back({r.label, &r.log});
  WriteOverlay(base / "plot_gen_power.csv", logs, "gen_power");
  if (!logs.empty()) {
    for (std::size_t l = 0; l < logs[0].log->locations.size(); ++l) {
      const std::string name = "v_p_" + std::to_string(l);
      WriteOverlay(base / ("plot_" + name + ".csv"), logs, name);
    }
  }
  WriteOverlay(base / "plot_omega_g.csv", logs, "omega_g");
  WriteOverlay(base / "plot_pitch.csv", logs, "pitch");
}

void WriteReport(const std::string& dir, const NpSweepReport& report) {
  const auto base = MakeDir(dir);
  WriteJson(base / "np_sweep.json", ToJson(report));
  std::vector<LabeledLog> logs;
  for (const auto& r : report.runs) logs.push_back({r.label, &r.log});
  WriteOverlay(base / "plot_gen_power.csv", logs, "gen_power");
  WriteOverlay(base / "plot_omega_g.csv", logs, "omega_g");
  WriteOverlay(base / "plot_solve_time.csv", logs, "solve_time");
}

void WriteReport(const std::string& dir, const TerminalAblationReport& report) {
  const auto base = MakeDir(dir);
  WriteJson(base / "terminal_ablation.json", ToJson(report));
  const std::vector<LabeledLog> stair = {
      {report.with_terminal.label, &report.with_terminal.log},
      {report.without_terminal.label, &report.without_terminal.log}};
  const std::vector<LabeledLog> constant = {
      {report.constant_with.label, &report.constant_with.log},
      {report.constant_without.label, &report.constant_without.log}};
  WriteOverlay(base / "plot_tail_distance.csv", stair, "tail_distance");
  WriteOverlay(base / "plot_solve_time.csv", stair, "solve_time");
  WriteOverlay(base / "plot_gen_power.csv", stair, "gen_power");
  WriteOverlay(base / "plot_constant_gen_power.csv", constant, "gen_power");
}

}  // namespace wt_empc
