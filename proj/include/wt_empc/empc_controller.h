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

// Economic MPC for power capture and tower fore-aft damping.
//
// Inside the optimisation, energies are in MJ, powers in MW, modal states
// in m and m/s. Every public entry point takes and returns SI values.

#ifndef WT_EMPC_EMPC_CONTROLLER_H_
#define WT_EMPC_EMPC_CONTROLLER_H_

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/convex_model.h"
#include "wt_empc/pwl_envelope.h"
#include "wt_empc/qp_solver.h"
#include "wt_empc/tower_modal.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

enum class ControllerVariant { kNoDamping, kSingleMode, kMultiMode };

std::string ToString(ControllerVariant variant);
// Accepts "no-damping", "single-mode", "multi-mode".
ControllerVariant ParseVariant(const std::string& name);

struct ObjectiveWeights {
  double alpha1 = 1.0;    // generator power
  double alpha2 = 1.0;    // available-power envelope
  double alpha3 = 1.0;    // generator power rate
  double alpha4 = 0.01;   // rotor power rate
  double alpha5 = 100.0;  // overspeed slack
};

struct EmpcConfig {
  int horizon = 100;
  double sample_time = 0.2;  // s
  ObjectiveWeights weights;
  // One per tower location, same order as TowerParams::locations.
  std::vector<double> location_weights = {100.0, 20.0, 0.0};
  ControllerVariant variant = ControllerVariant::kMultiMode;
  bool terminal_constraint = true;
  double refit_wind_change = 0.5;         // m/s
  double steady_state_wind_change = 0.1;  // m/s
  int num_torque_cuts = 8;
  QpSettings qp;

  // Throws std::invalid_argument.
  void Validate(int num_locations) const;
};

// Coefficient surfaces and their envelopes, shareable between controllers.
struct AeroTables {
  std::shared_ptr<const CoeffSurface> cp;
  std::shared_ptr<const CoeffSurface> ct;
  std::shared_ptr<const PwlEnvelope> available_power;
  std::shared_ptr<const PwlEnvelope> max_thrust;
};

AeroTables BuildAeroTables(std::shared_ptr<const CoeffSurface> cp,
                           std::shared_ptr<const CoeffSurface> ct,
                           const TurbineParams& params, int num_segments = 5);
// Analytic C_p and momentum C_t on the default grids.
AeroTables DefaultAeroTables(const TurbineParams& params);

// S W S' for a shape matrix S (modes x locations), symmetrised.
Eigen::MatrixXd VelocityWeightMatrix(const Eigen::MatrixXd& shape_matrix,
                                     const Eigen::VectorXd& weights);
double VelocityObjective(const Eigen::VectorXd& modal_velocity,
                         const Eigen::MatrixXd& weight_matrix);

// Discrete model in optimisation units, plus what it was built from.
struct PredictionModel {
  DiscreteModel scaled;
  ThrustLinearization thrust;
  int num_states = 0;

  // Factors taking optimisation units to SI, per state.
  Eigen::VectorXd StateScale() const;
  Eigen::VectorXd ToScaled(const Eigen::VectorXd& x_si) const;
  Eigen::VectorXd ToSi(const Eigen::VectorXd& x_scaled) const;
};

PredictionModel MakePredictionModel(const ModalSystem& system,
                                    const ThrustLinearization& thrust,
                                    const TurbineParams& params,
                                    double sample_time);

inline constexpr double kEnergyUnit = 1e6;  // J per MJ
inline constexpr double kPowerUnit = 1e6;   // W per MW

struct SteadyState {
  Eigen::VectorXd x;  // SI
  double rotor_power = 0.0;
  double gen_power = 0.0;
  double slack = 0.0;  // J
  // ||x - A x - B u - c||_inf in optimisation units.
  double fixed_point_residual = 0.0;
  QpStatus status = QpStatus::kMaxIterations;
};

// Equilibrium problem over [x, P_r, P_g, t, eps] in optimisation units.
QuadraticProgram BuildSteadyStateQp(const PredictionModel& model,
                                    const ConvexConstraintSet& constraints,
                                    const ObjectiveWeights& weights,
                                    const Eigen::MatrixXd& velocity_weight);

// Best feasible equilibrium of the prediction model under constant wind.
SteadyState SolveSteadyState(const PredictionModel& model,
                             const ConvexConstraintSet& constraints,
                             const ObjectiveWeights& weights,
                             const Eigen::MatrixXd& velocity_weight,
                             const QpSettings& settings);

// Variable layout of the horizon problem.
struct FhocpLayout {
  int num_states = 0;
  int horizon = 0;

  int stage_size() const { return num_states + 3; }
  int state(int q, int i) const {
    return q < horizon ? q * stage_size() + i : horizon * stage_size() + i;
  }
  int rotor_power(int q) const { return q * stage_size() + num_states; }
  int gen_power(int q) const { return q * stage_size() + num_states + 1; }
  int epigraph(int q) const { return q * stage_size() + num_states + 2; }
  int slack() const { return horizon * stage_size() + num_states; }
  int size() const { return slack() + 1; }
};

struct FhocpInputs {
  const PredictionModel* model = nullptr;
  const ConvexConstraintSet* constraints = nullptr;  // one stage per step
  ObjectiveWeights weights;
  Eigen::MatrixXd velocity_weight;
  Eigen::VectorXd x0;             // SI
  double prev_rotor_power = 0.0;  // W, applied at the previous step
  double prev_gen_power = 0.0;    // W
  std::optional<Eigen::VectorXd> terminal_state;  // SI
};

// Minimisation form of the economic objective; variables in optimisation
// units, ordered by FhocpLayout.
QuadraticProgram AssembleFhocp(const FhocpInputs& in, FhocpLayout* layout);

struct Measurements {
  double omega_g = 0.0;  // rad/s
  Eigen::VectorXd x_p;   // m, per tower location
  Eigen::VectorXd v_p;   // m/s, per tower location
};

enum class ControlMode { kNominal, kNoTerminal, kHold };
std::string ToString(ControlMode mode);

struct ControlCommand {
  double torque = 0.0;            // N m
  double pitch = 0.0;             // rad
  double rotor_power = 0.0;       // W, P_r*
  double gen_power = 0.0;         // W, P_g*
  double predicted_energy = 0.0;  // J, K*(1)
  double thrust_model = 0.0;      // N, linearised thrust at (P_r*, K(0))
  double slack = 0.0;             // J
  bool pitch_saturated = false;
  ControlMode mode = ControlMode::kNominal;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double solve_time = 0.0;  // s
  double kkt_residual = 0.0;
  double terminal_gap = 0.0;   // inf-norm, optimisation units
  double tail_distance = 0.0;  // inf-norm over the second half, same units
};

class EmpcController {
 public:
  EmpcController(const TurbineParams& turbine, const TowerParams& tower,
                 AeroTables tables, EmpcConfig config);
  ~EmpcController();
  EmpcController(EmpcController&&) noexcept;
  EmpcController& operator=(EmpcController&&) noexcept;

  // One receding-horizon step. Throws std::invalid_argument on non-finite
  // measurements or non-positive wind.
  ControlCommand Step(const Measurements& meas, double wind);

  // Model state estimate from measurements: K and least-squares modal
  // coordinates.
  Eigen::VectorXd ReconstructState(const Measurements& meas) const;

  // Refreshes the thrust fit and steady state for `wind` if needed.
  void UpdateOperatingPoint(double wind);

  const EmpcConfig& config() const { return config_; }
  const ModalSystem& modal_system() const;
  const PredictionModel& prediction_model() const;
  const SteadyState& steady_state() const;
  const ConvexConstraintSet& stage_constraints() const;
  // Last optimal trajectory, x(0..N_p), SI. Empty before the first solve.
  const std::vector<Eigen::VectorXd>& predicted_states() const;
  double condition_number() const;

  // Optional JSON-lines debug stream, one object per Step.
  void set_debug_log(std::ostream* out) { debug_log_ = out; }

 private:
  struct State;
  EmpcConfig config_;
  std::unique_ptr<State> state_;
  std::ostream* debug_log_ = nullptr;
};

}  // namespace wt_empc

#endif  // WT_EMPC_EMPC_CONTROLLER_H_
