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

// Closed-loop simulation: nonlinear plant, wind profiles, metrics and the
// comparison experiments built on them.

#ifndef WT_EMPC_SIMULATION_H_
#define WT_EMPC_SIMULATION_H_

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wt_empc/empc_controller.h"
#include "wt_empc/tower_modal.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

struct WindPlateau {
  double speed = 0.0;  // m/s
  double start = 0.0;  // s
  double end = 0.0;    // s
};

class WindProfile {
 public:
  enum class Kind { kStaircase, kConstant, kFile };

  // ceil((end - start) / step) + 1 plateaus of `dwell` seconds; the last
  // one is clipped to `end`.
  static WindProfile Staircase(double start, double end, double step,
                               double dwell);
  static WindProfile Constant(double speed, double duration);
  // "time,speed" CSV, optional header, piecewise constant between rows.
  // The last row's time is the end of the profile.
  static WindProfile FromCsv(std::istream& in);

  double At(double t) const;
  double duration() const { return duration_; }
  double MinSpeed() const;
  Kind kind() const { return kind_; }
  const std::vector<WindPlateau>& plateaus() const& { return plateaus_; }
  std::vector<WindPlateau> plateaus() && { return std::move(plateaus_); }

 private:
  Kind kind_ = Kind::kConstant;
  std::vector<WindPlateau> plateaus_;
  double duration_ = 0.0;
};

struct PlantState {
  double omega_g = 0.0;
  ModalState tower;
};

// Drive train and tower integrated together with RK4, driven by the
// thrust of the current rotor state.
class Plant {
 public:
  Plant(const TurbineParams& turbine, ModalSystem tower, AeroTables tables,
        int substeps = 40);

  void Reset(const PlantState& state) { state_ = state; }
  // Throws StallError, or std::runtime_error on a non-finite state.
  void Advance(double torque, double pitch, double wind, double dt);
  Measurements Measure() const;
  double Thrust(double pitch, double wind) const;

  const PlantState& state() const { return state_; }
  const ModalSystem& tower() const { return tower_; }
  const TurbineParams& turbine() const { return turbine_; }

  // Generator speed at rest under `thrust` for the given rotor speed.
  PlantState Equilibrium(double omega_g, double thrust) const;

 private:
  TurbineParams turbine_;
  ModalSystem tower_;
  AeroTables tables_;
  int substeps_;
  PlantState state_;
};

struct SimRecord {
  double t = 0.0;
  double wind = 0.0;
  double omega_g = 0.0;
  double energy = 0.0;
  Eigen::VectorXd x_m, v_m;   // plant modal states
  Eigen::VectorXd x_p, v_p;   // per location
  double thrust = 0.0;        // N, plant
  double thrust_model = 0.0;  // N, linearised
  double torque = 0.0;
  double pitch = 0.0;
  double rotor_power_cmd = 0.0;
  double gen_power_cmd = 0.0;
  double rotor_power = 0.0;   // W, plant over the step start
  double gen_power = 0.0;     // W, plant, eta T_g omega_g
  Eigen::VectorXd tfam_rate;  // N m/s, per location
  double slack = 0.0;
  std::string status;
  std::string mode;
  double solve_time = 0.0;
  int iterations = 0;
  double terminal_gap = 0.0;
  double tail_distance = 0.0;
  double steady_state_residual = 0.0;
  double torque_roundtrip = 0.0;  // relative
  double pitch_roundtrip = 0.0;   // W
  bool pitch_saturated = false;
};

struct SimLog {
  std::vector<SimRecord> records;
  std::vector<WindPlateau> plateaus;
  std::vector<double> locations;
  int num_modes = 0;
  double sample_time = 0.0;
  double generator_efficiency = 1.0;
  bool completed = false;
  std::string diagnostic;
};

struct SimulationOptions {
  double cut_in = 3.0;  // m/s
  int plant_substeps = 40;
  // Called after every step; return false to stop early.
  std::function<bool(const SimRecord&)> on_step;
};

struct SimulationSetup {
  TurbineParams turbine;
  TowerParams tower;
  AeroTables tables;
  EmpcConfig controller;
};

// Throws std::invalid_argument if the wind drops below cut-in. Plant
// failures end the run early with SimLog::completed false.
SimLog RunSimulation(const SimulationSetup& setup, const WindProfile& wind,
                     const SimulationOptions& options = {});

struct PlateauMetrics {
  double speed = 0.0;
  double steady_gen_power = 0.0;  // W, mean over the settled window
  double steady_omega_g = 0.0;
  Eigen::VectorXd rms_velocity;  // m/s, transient window
  Eigen::VectorXd peak_velocity;
  Eigen::VectorXd rms_tfam_rate;
  double mean_tail_distance = 0.0;
  double max_terminal_gap = 0.0;
};

struct Metrics {
  std::vector<PlateauMetrics> plateaus;
  double energy_captured = 0.0;  // J
  double mean_solve_time = 0.0;
  double max_solve_time = 0.0;
  int hold_steps = 0;
  int no_terminal_steps = 0;
  double rms_thrust_error = 0.0;  // N
  double max_steady_state_residual = 0.0;
  double max_torque_roundtrip = 0.0;
  double max_pitch_roundtrip = 0.0;  // W
  // Trapezoidal integral of P_r - P_g / eta over the logged samples against
  // the plant's change in K; the gap is the sampled-signal mismatch.
  double energy_balance_error = 0.0;  // J
  double energy_throughput = 0.0;     // J, integral of P_g / eta
};

struct MetricWindows {
  double settled_fraction = 0.5;  // tail of each plateau
  double transient = 30.0;        // s, head of each plateau
};

Metrics ComputeMetrics(const SimLog& log, const MetricWindows& windows = {});

}  // namespace wt_empc

#endif  // WT_EMPC_SIMULATION_H_
