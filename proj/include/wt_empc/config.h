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

// Scenario configuration: one INI file with the sections [turbine],
// [tower], [controller], [wind] and [simulation]. Every key is optional and
// falls back to the defaults of the corresponding struct. Lists are comma
// separated. Unknown sections or keys are rejected.

#ifndef WT_EMPC_CONFIG_H_
#define WT_EMPC_CONFIG_H_

#include <iosfwd>
#include <string>

#include "wt_empc/empc_controller.h"
#include "wt_empc/simulation.h"
#include "wt_empc/tower_modal.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

struct WindConfig {
  WindProfile::Kind kind = WindProfile::Kind::kStaircase;
  // Staircase.
  double start = 6.0;    // m/s
  double end = 17.0;     // m/s
  double step = 1.0;     // m/s
  double dwell = 100.0;  // s
  // Constant.
  double speed = 16.0;      // m/s
  double duration = 300.0;  // s
  // File: "time,speed" CSV.
  std::string file;

  // Throws ParseError if the file cannot be read.
  WindProfile Build() const;
};

struct SimulationConfig {
  double cut_in = 3.0;  // m/s
  int plant_substeps = 40;
  double settled_fraction = 0.5;
  double transient_window = 30.0;  // s
  // Coefficient tables as (lambda, beta) CSV grids; empty selects the
  // analytic surfaces.
  std::string cp_table;
  std::string ct_table;
  int pwl_segments = 5;

  SimulationOptions Options() const;
  MetricWindows Windows() const;
};

struct ScenarioConfig {
  TurbineParams turbine;
  TowerParams tower;
  EmpcConfig controller;
  WindConfig wind;
  SimulationConfig simulation;

  // Throws std::invalid_argument.
  void Validate() const;
};

// Relative file names are resolved against `base_dir` when it is non-empty.
// Throws ParseError on syntax errors, unknown keys or bad values, and
// std::invalid_argument if the result fails validation.
ScenarioConfig ParseConfig(std::istream& in, const std::string& base_dir = "");
ScenarioConfig LoadConfig(const std::string& path);
void WriteConfig(std::ostream& out, const ScenarioConfig& config);

// Builds the coefficient tables and envelopes the scenario asks for.
SimulationSetup MakeSetup(const ScenarioConfig& config);

}  // namespace wt_empc

#endif  // WT_EMPC_CONFIG_H_
