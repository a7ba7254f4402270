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

// Multi-run experiments: controller variant comparison, prediction horizon
// sweep and terminal-constraint ablation. Independent runs execute in
// parallel, at most WT_EMPC_THREADS at a time.

#ifndef WT_EMPC_EXPERIMENTS_H_
#define WT_EMPC_EXPERIMENTS_H_

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "wt_empc/config.h"
#include "wt_empc/simulation.h"

namespace wt_empc {

struct RunSpec {
  std::string label;
  SimulationSetup setup;
  WindProfile wind;
  SimulationOptions options;
};

struct RunResult {
  std::string label;
  SimLog log;
  Metrics metrics;
  double wall_time = 0.0;  // s
};

// WT_EMPC_THREADS if set to a positive integer, else the hardware
// concurrency (at least 1).
int MaxParallelRuns();

// Results keep the order of `specs`. A run that throws is reported with an
// incomplete log and the exception text as its diagnostic.
std::vector<RunResult> RunBatch(const std::vector<RunSpec>& specs,
                                const MetricWindows& windows,
                                int max_parallel = 0);

// Per-plateau relative power delta and per-location RMS velocity ratio of a
// run against a baseline run on the same wind.
struct PlateauComparison {
  double speed = 0.0;
  double gen_power_delta = 0.0;  // (P - P_base) / P_base
  Eigen::VectorXd rms_ratio;     // rms / rms_base, per location
};

struct Comparison {
  std::string label;
  std::string baseline;
  std::vector<PlateauComparison> plateaus;
  // Transient windows of every plateau after the first, pooled.
  Eigen::VectorXd pooled_rms;
  Eigen::VectorXd pooled_rms_baseline;
  Eigen::VectorXd pooled_reduction;  // 1 - pooled_rms / pooled_rms_baseline
};

// RMS of v_p per location over the transient windows of plateaus 2..n.
Eigen::VectorXd PooledTransientRms(const SimLog& log,
                                   const MetricWindows& windows);

Comparison CompareRuns(const RunResult& run, const RunResult& baseline,
                       const MetricWindows& windows);

struct ComparisonReport {
  std::vector<RunResult> runs;  // the first variant is the baseline
  std::vector<Comparison> comparisons;
};

ComparisonReport CompareControllers(
    const ScenarioConfig& scenario,
    const std::vector<ControllerVariant>& variants);

struct NpSweepReport {
  std::vector<int> horizons;
  std::vector<RunResult> runs;
  // Worst |P - P_ref| / P_ref over plateaus against the longest horizon.
  std::vector<double> max_power_deviation;
};

NpSweepReport NpSweep(const ScenarioConfig& scenario,
                      const std::vector<int>& horizons);

struct TerminalAblationReport {
  RunResult with_terminal;
  RunResult without_terminal;
  RunResult constant_with;
  RunResult constant_without;
  double constant_speed = 16.0;
  double constant_power_with = 0.0;  // W, settled
  double constant_power_without = 0.0;
};

// Runs the scenario with and without the terminal constraint, plus a
// constant-wind pair at `constant_speed` for `constant_duration` seconds.
TerminalAblationReport TerminalAblation(const ScenarioConfig& scenario,
                                        double constant_speed = 16.0,
                                        double constant_duration = 300.0);

nlohmann::json ToJson(const ComparisonReport& report);
nlohmann::json ToJson(const NpSweepReport& report);
nlohmann::json ToJson(const TerminalAblationReport& report);

// Report JSON plus overlay CSVs of the panels worth plotting.
void WriteReport(const std::string& dir, const ComparisonReport& report);
void WriteReport(const std::string& dir, const NpSweepReport& report);
void WriteReport(const std::string& dir, const TerminalAblationReport& report);

}  // namespace wt_empc

#endif  // WT_EMPC_EXPERIMENTS_H_
