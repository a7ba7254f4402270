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

#include "wt_empc/empc_controller.h"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "wt_empc/config.h"
#include "wt_empc/kinetic_energy.h"
#include "wt_empc/qp_solver.h"
#include "wt_empc/tower_modal.h"

namespace wt_empc {
namespace {

const SimulationSetup& DefaultSetup() {
  static const SimulationSetup* setup =
      new SimulationSetup(MakeSetup(ScenarioConfig{}));
  return *setup;
}

EmpcController MakeController(EmpcConfig config) {
  const SimulationSetup& s = DefaultSetup();
  return EmpcController(s.turbine, s.tower, s.tables, std::move(config));
}

EmpcController MakeController() {
  return MakeController(DefaultSetup().controller);
}

// Measurements of the plant sitting exactly at model state `x` (SI).
Measurements MeasureState(const EmpcController& ctrl,
                          const Eigen::VectorXd& x) {
  const ModalSystem& sys = ctrl.modal_system();
  const int nm = sys.num_modes();
  ModalState ms = ModalState::Zero(nm);
  ms.x = x.segment(1, nm);
  ms.v = x.segment(1 + nm, nm);
  Measurements m;
  m.omega_g = OmegaFromEnergy(x(0), DefaultSetup().turbine.EquivalentInertia());
  std::tie(m.x_p, m.v_p) = ProjectToPhysical(sys, ms);
  return m;
}

// Horizon problem at `wind` from state x0 with the controller's model.
FhocpInputs HorizonInputs(const EmpcController& ctrl, int horizon,
                          ConvexConstraintSet* set) {
  *set = ctrl.stage_constraints();
  set->stages.assign(horizon, set->stages.front());
  FhocpInputs in;
  in.model = &ctrl.prediction_model();
  in.constraints = set;
  in.weights = ctrl.config().weights;
  const SteadyState& ss = ctrl.steady_state();
  in.x0 = ss.x;
  in.prev_rotor_power = ss.rotor_power;
  in.prev_gen_power = ss.gen_power;
  return in;
}

QpSolution SolveOrDie(const QuadraticProgram& qp, double tolerance = 1e-6) {
  QpSettings settings;
  settings.tolerance = tolerance;
  QpSolver solver(settings);
  QpSolution sol = solver.Solve(qp);
  EXPECT_EQ(sol.status, QpStatus::kOptimal) << sol.diagnostic;
  return sol;
}

TEST(VelocityObjective, ZeroVelocityGivesZero) {
  const Eigen::MatrixXd s{{1.0, 0.72, 0.0}, {1.0, -0.4, 0.0}};
  const Eigen::MatrixXd w =
      VelocityWeightMatrix(s, Eigen::Vector3d(100, 20, 0));
  EXPECT_EQ(VelocityObjective(Eigen::Vector2d::Zero(), w), 0.0);
}

TEST(VelocityObjective, SingleModeHandExpansion) {
  const Eigen::MatrixXd s{{1.0, 0.7}};
  const Eigen::MatrixXd w = VelocityWeightMatrix(s, Eigen::Vector2d(100, 20));
  for (double v : {-0.3, 0.01, 2.0}) {
    Eigen::VectorXd vm(1);
    vm << v;
    EXPECT_NEAR(VelocityObjective(vm, w), 109.8 * v * v, 1e-12 * (1 + v * v));
  }
}

TEST(VelocityObjective, ZeroWeightsVanish) {
  const Eigen::MatrixXd s{{1.0, 0.72}, {1.0, -0.4}};
  const Eigen::MatrixXd w = VelocityWeightMatrix(s, Eigen::Vector2d::Zero());
  EXPECT_EQ(VelocityObjective(Eigen::Vector2d(0.3, -1.2), w), 0.0);
}

TEST(VelocityObjective, WeightMatrixIsSymmetricPsd) {
  const Eigen::MatrixXd s{{1.0, 0.72, 0.0}, {1.0, -0.4, 0.0}};
  const Eigen::MatrixXd w =
      VelocityWeightMatrix(s, Eigen::Vector3d(100, 20, 0));
  EXPECT_EQ((w - w.transpose()).norm(), 0.0);
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-12);
}

TEST(EmpcConfig, RejectsInvalidSettings) {
  EmpcConfig c;
  c.horizon = 0;
  EXPECT_THROW(c.Validate(3), std::invalid_argument);
  c = EmpcConfig();
  c.sample_time = 0.0;
  EXPECT_THROW(c.Validate(3), std::invalid_argument);
  c = EmpcConfig();
  c.weights.alpha4 = -1.0;
  EXPECT_THROW(c.Validate(3), std::invalid_argument);
  c = EmpcConfig();
  EXPECT_THROW(c.Validate(2), std::invalid_argument);
  EXPECT_NO_THROW(EmpcConfig().Validate(3));
}

TEST(ControllerVariant, NamesRoundTrip) {
  for (auto v : {ControllerVariant::kNoDamping, ControllerVariant::kSingleMode,
                 ControllerVariant::kMultiMode}) {
    EXPECT_EQ(ParseVariant(ToString(v)), v);
  }
  EXPECT_THROW(ParseVariant("two-mode"), std::invalid_argument);
}

TEST(ControllerVariant, StateDimensions) {
  EmpcConfig c = DefaultSetup().controller;
  const std::vector<std::pair<ControllerVariant, int>> cases = {
      {ControllerVariant::kSingleMode, 3},
      {ControllerVariant::kMultiMode, 5},
      {ControllerVariant::kNoDamping, 5}};
  for (const auto& [variant, states] : cases) {
    c.variant = variant;
    EmpcController ctrl = MakeController(c);
    ctrl.UpdateOperatingPoint(10.0);
    EXPECT_EQ(ctrl.prediction_model().num_states, states) << ToString(variant);
  }
}

// N_p = 1 with nothing active: P_g only enters alpha1 P_g and the rate
// term, so the maximiser is prev + alpha1 T_s^2 / (2 alpha3).
TEST(AssembleFhocp, SingleStepMatchesAnalyticMaximiser) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(8.0);
  ConvexConstraintSet set;
  FhocpInputs in = HorizonInputs(ctrl, 1, &set);
  in.prev_gen_power = 1.0e6;
  FhocpLayout lay;
  const QpSolution sol = SolveOrDie(AssembleFhocp(in, &lay));
  const double ts = ctrl.config().sample_time;
  const ObjectiveWeights& w = in.weights;
  const double expected = 1.0 + w.alpha1 * ts * ts / (2.0 * w.alpha3);  // MW
  EXPECT_NEAR(sol.x(lay.gen_power(0)), expected, 1e-7);
}

TEST(AssembleFhocp, SteadyStateIsStationary) {
  for (double wind : {8.0, 16.0}) {
    EmpcController ctrl = MakeController();
    ctrl.UpdateOperatingPoint(wind);
    ConvexConstraintSet set;
    FhocpInputs in = HorizonInputs(ctrl, 30, &set);
    in.velocity_weight =
        VelocityWeightMatrix(ctrl.modal_system().shape_matrix,
                             Eigen::Map<const Eigen::VectorXd>(
                                 ctrl.config().location_weights.data(),
                                 ctrl.config().location_weights.size()));
    in.terminal_state = ctrl.steady_state().x;
    FhocpLayout lay;
    const QpSolution sol = SolveOrDie(AssembleFhocp(in, &lay));
    const SteadyState& ss = ctrl.steady_state();
    for (int q = 0; q < lay.horizon; ++q) {
      EXPECT_NEAR(sol.x(lay.rotor_power(q)), ss.rotor_power / kPowerUnit, 1e-6)
          << "wind " << wind << " q " << q;
      EXPECT_NEAR(sol.x(lay.gen_power(q)), ss.gen_power / kPowerUnit, 1e-6)
          << "wind " << wind << " q " << q;
    }
  }
}

TEST(AssembleFhocp, DroppingTerminalConstraintCannotLowerTheObjective) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(9.0);
  ConvexConstraintSet set;
  FhocpInputs in = HorizonInputs(ctrl, 40, &set);
  // Start away from the steady state.
  in.x0(0) *= 0.97;
  in.x0(1) += 0.05;
  in.prev_gen_power *= 0.9;
  const double free = SolveOrDie(AssembleFhocp(in, nullptr)).objective;
  in.terminal_state = ctrl.steady_state().x;
  const double pinned = SolveOrDie(AssembleFhocp(in, nullptr)).objective;
  // Minimisation form: the relaxed problem is at least as good.
  EXPECT_LE(free, pinned + 1e-9 * (1.0 + std::abs(pinned)));
  EXPECT_LT(free, pinned);
}

TEST(AssembleFhocp, ArgmaxInvariantUnderWeightScaling) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(11.0);
  ConvexConstraintSet set;
  FhocpInputs in = HorizonInputs(ctrl, 30, &set);
  in.x0(0) *= 0.98;
  in.x0(2) -= 0.02;
  in.velocity_weight = VelocityWeightMatrix(ctrl.modal_system().shape_matrix,
                                            Eigen::Vector3d(100.0, 20.0, 0.0));
  in.terminal_state = ctrl.steady_state().x;
  // The minimiser is unique (the rate terms are strictly convex in the
  // inputs); solve tightly so solver tolerance does not mask it.
  const double tol = 1e-10;
  const QpSolution a = SolveOrDie(AssembleFhocp(in, nullptr), tol);
  ObjectiveWeights& w = in.weights;
  for (double* alpha :
       {&w.alpha1, &w.alpha2, &w.alpha3, &w.alpha4, &w.alpha5}) {
    *alpha *= 2.0;
  }
  in.velocity_weight *= 2.0;
  const QpSolution b = SolveOrDie(AssembleFhocp(in, nullptr), tol);
  ASSERT_EQ(a.x.size(), b.x.size());
  for (int i = 0; i < a.x.size(); ++i) {
    EXPECT_NEAR(a.x(i), b.x(i), 1e-6 * (1.0 + std::abs(a.x(i)))) << i;
  }
  EXPECT_NEAR(b.objective, 2.0 * a.objective, 1e-6 * std::abs(a.objective));
}

TEST(AssembleFhocp, EqualConsecutiveInputsCostNoRate) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(8.0);
  ConvexConstraintSet set;
  FhocpInputs in = HorizonInputs(ctrl, 5, &set);
  FhocpLayout lay;
  const QuadraticProgram qp = AssembleFhocp(in, &lay);
  // Every input equal to the previous one: the rate terms vanish. The QP
  // omits the constant r u(-1)^2 of the first difference, so it shows up
  // here with a minus sign.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(lay.size());
  for (int q = 0; q < lay.horizon; ++q) {
    z(lay.rotor_power(q)) = in.prev_rotor_power / kPowerUnit;
    z(lay.gen_power(q)) = in.prev_gen_power / kPowerUnit;
  }
  const double quad = 0.5 * z.dot(qp.hessian * z);
  Eigen::VectorXd g_inputs = Eigen::VectorXd::Zero(lay.size());
  for (int q = 0; q < lay.horizon; ++q) {
    g_inputs(lay.rotor_power(q)) = qp.gradient(lay.rotor_power(q));
    g_inputs(lay.gen_power(q)) = qp.gradient(lay.gen_power(q));
  }
  const ObjectiveWeights& w = in.weights;
  const double ts = ctrl.config().sample_time;
  const double pg = in.prev_gen_power / kPowerUnit;
  const double pr = in.prev_rotor_power / kPowerUnit;
  const double expected = -w.alpha1 * lay.horizon * pg -
                          w.alpha3 / (ts * ts) * pg * pg -
                          w.alpha4 / (ts * ts) * pr * pr;
  EXPECT_NEAR(quad + g_inputs.dot(z), expected, 1e-9 * std::abs(expected));
}

TEST(EmpcController, CommandIsConstantAtSteadyState) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(10.0);
  const Measurements meas = MeasureState(ctrl, ctrl.steady_state().x);
  const ControlCommand first = ctrl.Step(meas, 10.0);
  ASSERT_EQ(first.mode, ControlMode::kNominal);
  for (int k = 0; k < 5; ++k) {
    const ControlCommand c = ctrl.Step(meas, 10.0);
    EXPECT_NEAR(c.gen_power, first.gen_power, 1e-3);  // W
    EXPECT_NEAR(c.rotor_power, first.rotor_power, 1e-3);
    EXPECT_NEAR(c.torque, first.torque, 1e-6 * first.torque);
    EXPECT_NEAR(c.pitch, first.pitch, 1e-9);
  }
}

TEST(EmpcController, TorqueRoundTripAndActuatorBounds) {
  const TurbineParams& p = DefaultSetup().turbine;
  const double j = p.EquivalentInertia();
  for (double wind : {6.0, 9.0, 12.0, 17.0}) {
    EmpcController ctrl = MakeController();
    ctrl.UpdateOperatingPoint(wind);
    Eigen::VectorXd x = ctrl.steady_state().x;
    x(0) *= 0.95;
    x(2) += 0.05;
    const Measurements meas = MeasureState(ctrl, x);
    for (int k = 0; k < 3; ++k) {
      const ControlCommand c = ctrl.Step(meas, wind);
      ASSERT_NE(c.mode, ControlMode::kHold) << wind;
      EXPECT_GE(c.torque, 0.0);
      EXPECT_LE(c.torque, p.torque_g_max);
      EXPECT_GE(c.pitch, p.beta_min);
      EXPECT_LE(c.pitch, p.beta_max);
      const double back = p.generator_efficiency * c.torque *
                          std::sqrt(2.0 * c.predicted_energy / j);
      EXPECT_NEAR(back, c.gen_power, 1e-9 * c.gen_power) << wind;
    }
  }
}

TEST(EmpcController, TerminalGapIsClosed) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(14.0);
  Eigen::VectorXd x = ctrl.steady_state().x;
  x(1) -= 0.03;
  const ControlCommand c = ctrl.Step(MeasureState(ctrl, x), 14.0);
  ASSERT_EQ(c.mode, ControlMode::kNominal);
  EXPECT_LE(c.terminal_gap, 1e-6);
  ASSERT_EQ(static_cast<int>(ctrl.predicted_states().size()),
            ctrl.config().horizon + 1);
}

TEST(EmpcController, NoDampingMatchesMultiModeWithoutWeights) {
  EmpcConfig c = DefaultSetup().controller;
  c.location_weights.assign(c.location_weights.size(), 0.0);
  c.variant = ControllerVariant::kNoDamping;
  EmpcController no_damping = MakeController(c);
  c.variant = ControllerVariant::kMultiMode;
  EmpcController multi = MakeController(c);
  multi.UpdateOperatingPoint(13.0);
  Eigen::VectorXd x = multi.steady_state().x;
  x(3) += 0.02;
  const Measurements meas = MeasureState(multi, x);
  for (int k = 0; k < 3; ++k) {
    const ControlCommand a = no_damping.Step(meas, 13.0);
    const ControlCommand b = multi.Step(meas, 13.0);
    EXPECT_EQ(a.gen_power, b.gen_power);
    EXPECT_EQ(a.rotor_power, b.rotor_power);
    EXPECT_EQ(a.torque, b.torque);
    EXPECT_EQ(a.pitch, b.pitch);
  }
}

TEST(EmpcController, EveryVariantIsFeasibleAtTheStaircaseStart) {
  const double wind = 6.0;
  for (auto v : {ControllerVariant::kNoDamping, ControllerVariant::kSingleMode,
                 ControllerVariant::kMultiMode}) {
    EmpcConfig c = DefaultSetup().controller;
    c.variant = v;
    EmpcController ctrl = MakeController(c);
    ctrl.UpdateOperatingPoint(wind);
    ASSERT_EQ(ctrl.steady_state().status, QpStatus::kOptimal) << ToString(v);
    const ControlCommand cmd =
        ctrl.Step(MeasureState(ctrl, ctrl.steady_state().x), wind);
    EXPECT_EQ(cmd.status, QpStatus::kOptimal) << ToString(v);
    EXPECT_EQ(cmd.mode, ControlMode::kNominal) << ToString(v);
  }
}

TEST(EmpcController, ReconstructsModalStateFromLocations) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(9.0);
  Eigen::VectorXd x = ctrl.steady_state().x;
  x.tail(4) << 0.1, -0.02, 0.03, 0.004;
  const Eigen::VectorXd back = ctrl.ReconstructState(MeasureState(ctrl, x));
  EXPECT_NEAR(back(0), x(0), 1e-9 * x(0));
  EXPECT_LE((back.tail(4) - x.tail(4)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(EmpcController, RejectsBadInputs) {
  EmpcController ctrl = MakeController();
  ctrl.UpdateOperatingPoint(9.0);
  Measurements meas = MeasureState(ctrl, ctrl.steady_state().x);
  EXPECT_THROW(ctrl.Step(meas, 0.0), std::invalid_argument);
  meas.v_p(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ctrl.Step(meas, 9.0), std::invalid_argument);
}

}  // namespace
}  // namespace wt_empc
