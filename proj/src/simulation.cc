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

#include "wt_empc/simulation.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"

namespace wt_empc {

WindProfile WindProfile::Staircase(double start, double end, double step,
                                   double dwell) {
  if (!(start > 0.0) || !(end >= start) || !(step > 0.0) || !(dwell > 0.0)) {
    throw std::invalid_argument("bad staircase wind parameters");
  }
  WindProfile w;
  w.kind_ = Kind::kStaircase;
  const int count =
      static_cast<int>(std::ceil((end - start) / step - 1e-9)) + 1;
  for (int i = 0; i < count; ++i) {
    const double v = std::min(start + i * step, end);
    w.plateaus_.push_back({v, i * dwell, (i + 1) * dwell});
  }
  w.duration_ = count * dwell;
  return w;
}

WindProfile WindProfile::Constant(double speed, double duration) {
  if (!(speed > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("bad constant wind parameters");
  }
  WindProfile w;
  w.kind_ = Kind::kConstant;
  w.plateaus_.push_back({speed, 0.0, duration});
  w.duration_ = duration;
  return w;
}

WindProfile WindProfile::FromCsv(std::istream& in) {
  WindProfile w;
  w.kind_ = Kind::kFile;
  std::string line;
  int row = 0;
  std::vector<std::pair<double, double>> pts;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream f(line);
    double t = 0.0, v = 0.0;
    if (!(f >> t >> v)) {
      if (row == 1) continue;  // header
      throw ParseError("wind file row " + std::to_string(row) +
                       " is malformed");
    }
    if (!(v > 0.0)) throw ParseError("wind speeds must be positive");
    if (!pts.empty() && !(t > pts.back().first)) {
      throw ParseError("wind file times must increase");
    }
    pts.emplace_back(t, v);
  }
  if (pts.size() < 2 || pts.front().first != 0.0) {
    throw ParseError("wind file needs at least two rows starting at t = 0");
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    w.plateaus_.push_back({pts[i].second, pts[i].first, pts[i + 1].first});
  }
  w.duration_ = pts.back().first;
  return w;
}

double WindProfile::At(double t) const {
  for (const auto& p : plateaus_) {
    if (t < p.end) return p.speed;
  }
  return plateaus_.back().speed;
}

double WindProfile::MinSpeed() const {
  double m = plateaus_.front().speed;
  for (const auto& p : plateaus_) m = std::min(m, p.speed);
  return m;
}

Plant::Plant(const TurbineParams& turbine, ModalSystem tower, AeroTables tables,
             int substeps)
    : turbine_(turbine),
      tower_(std::move(tower)),
      tables_(std::move(tables)),
      substeps_(substeps) {
  if (substeps_ < 1) throw std::invalid_argument("need at least one substep");
  state_.omega_g = turbine_.omega_g_rated;
  state_.tower = ModalState::Zero(tower_.num_modes());
}

double Plant::Thrust(double pitch, double wind) const {
  return ThrustForce(state_.omega_g, pitch, wind, *tables_.ct, turbine_);
}

PlantState Plant::Equilibrium(double omega_g, double thrust) const {
  PlantState s;
  s.omega_g = omega_g;
  s.tower = ModalState::Zero(tower_.num_modes());
  s.tower.x = (tower_.input.array() * thrust * tower_.mass.array() /
               tower_.stiffness.array())
                  .matrix();
  return s;
}

void Plant::Advance(double torque, double pitch, double wind, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const int nm = tower_.num_modes();
  const CoeffSurface& cp = *tables_.cp;
  const CoeffSurface& ct = *tables_.ct;
  // y = [omega, x_m, v_m]
  auto f = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(y.size());
    dy(0) = DriveTrainAcceleration(y(0), torque, pitch, wind, cp, turbine_);
    const double thrust = ThrustForce(y(0), pitch, wind, ct, turbine_);
    const ModalState m{y.segment(1, nm), y.segment(1 + nm, nm)};
    dy.segment(1, nm) = m.v;
    dy.segment(1 + nm, nm) = ModalAcceleration(tower_, m, thrust);
    return dy;
  };
  Eigen::VectorXd y(1 + 2 * nm);
  y << state_.omega_g, state_.tower.x, state_.tower.v;
  const double h = dt / substeps_;
  for (int i = 0; i < substeps_; ++i) {
    const Eigen::VectorXd k1 = f(y);
    const Eigen::VectorXd k2 = f(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) throw std::runtime_error("plant state is not finite");
    if (!(y(0) > 0.0)) throw StallError("rotor stalled");
  }
  state_.omega_g = y(0);
  state_.tower.x = y.segment(1, nm);
  state_.tower.v = y.segment(1 + nm, nm);
}

Measurements Plant::Measure() const {
  Measurements m;
  m.omega_g = state_.omega_g;
  std::tie(m.x_p, m.v_p) = ProjectToPhysical(tower_, state_.tower);
  return m;
}

SimLog RunSimulation(const SimulationSetup& setup, const WindProfile& wind,
                     const SimulationOptions& options) {
  if (wind.MinSpeed() < options.cut_in) {
    throw std::invalid_argument("wind profile drops below cut-in speed");
  }
  const TurbineParams& p = setup.turbine;
  const double ts = setup.controller.sample_time;
  const double j = p.EquivalentInertia();
  EmpcController ctl(p, setup.tower, setup.tables, setup.controller);
  Plant plant(p, BuildModalSystem(setup.tower), setup.tables,
              options.plant_substeps);
  const ModalSystem& tower = plant.tower();
  const int nl = tower.num_locations();

  SimLog log;
  log.plateaus = wind.plateaus();
  log.locations = tower.locations;
  log.num_modes = tower.num_modes();
  log.sample_time = ts;
  log.generator_efficiency = p.generator_efficiency;

  // Start at the controller's equilibrium for the first wind speed.
  const double v0 = wind.At(0.0);
  ctl.UpdateOperatingPoint(v0);
  double omega0 = p.omega_g_rated;
  double beta0 = p.beta_min;
  if (ctl.steady_state().status == QpStatus::kOptimal) {
    const SteadyState& ss = ctl.steady_state();
    omega0 = OmegaFromEnergy(ss.x(0), j);
    try {
      beta0 = PitchInverse(ss.rotor_power, v0, ss.x(0), *setup.tables.cp, p);
    } catch (const InfeasibleTargetError&) {
      beta0 = AvailablePower(v0, ss.x(0), *setup.tables.cp, p).beta;
    }
  }
  plant.Reset({omega0, ModalState::Zero(tower.num_modes())});
  plant.Reset(plant.Equilibrium(omega0, plant.Thrust(beta0, v0)));

  std::vector<TfamCoefficients> tfam;
  for (int l = 0; l < nl; ++l)
    tfam.push_back(DefaultTfamCoefficients(tower, l));
  const int top = static_cast<int>(
      std::max_element(tower.locations.begin(), tower.locations.end()) -
      tower.locations.begin());

  const int steps = static_cast<int>(std::llround(wind.duration() / ts));
  log.records.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = k * ts;
    const double v = wind.At(t);
    const Measurements meas = plant.Measure();
    const ControlCommand cmd = ctl.Step(meas, v);

    SimRecord r;
    r.t = t;
    r.wind = v;
    r.omega_g = plant.state().omega_g;
    r.energy = KineticEnergy(r.omega_g, j);
    r.x_m = plant.state().tower.x;
    r.v_m = plant.state().tower.v;
    r.x_p = meas.x_p;
    r.v_p = meas.v_p;
    r.thrust = plant.Thrust(cmd.pitch, v);
    r.thrust_model = cmd.thrust_model;
    r.torque = cmd.torque;
    r.pitch = cmd.pitch;
    r.rotor_power_cmd = cmd.rotor_power;
    r.gen_power_cmd = cmd.gen_power;
    r.rotor_power = RotorPower(r.omega_g, cmd.pitch, v, *setup.tables.cp, p);
    r.gen_power = GeneratorPower(cmd.torque, r.omega_g, p);
    const Eigen::VectorXd acc =
        tower.shape_matrix.transpose() *
        ModalAcceleration(tower, plant.state().tower, r.thrust);
    r.tfam_rate.resize(nl);
    for (int l = 0; l < nl; ++l) {
      r.tfam_rate(l) =
          TfamRate(tower.tower_height, r.v_p(top), acc(top), r.v_p(l), acc(l),
                   tower.locations[l], tfam[l].d, tfam[l].k);
    }
    r.slack = cmd.slack;
    r.status = ToString(cmd.status);
    r.mode = ToString(cmd.mode);
    r.solve_time = cmd.solve_time;
    r.iterations = cmd.iterations;
    r.terminal_gap = cmd.terminal_gap;
    r.tail_distance = cmd.tail_distance;
    r.steady_state_residual = ctl.steady_state().fixed_point_residual;
    r.pitch_saturated = cmd.pitch_saturated;
    if (cmd.mode != ControlMode::kHold && cmd.predicted_energy > 0.0) {
      const double omega_star = OmegaFromEnergy(cmd.predicted_energy, j);
      if (cmd.gen_power > 0.0) {
        r.torque_roundtrip =
            std::abs(GeneratorPower(cmd.torque, omega_star, p) -
                     cmd.gen_power) /
            cmd.gen_power;
      }
      r.pitch_roundtrip =
          std::abs(RotorPower(omega_star, cmd.pitch, v, *setup.tables.cp, p) -
                   cmd.rotor_power);
    }
    log.records.push_back(r);
    if (options.on_step && !options.on_step(log.records.back())) break;

    try {
      plant.Advance(cmd.torque, cmd.pitch, v, ts);
    } catch (const std::exception& e) {
      log.diagnostic = std::string("plant failure at t = ") +
                       std::to_string(t) + " s: " + e.what();
      return log;
    }
  }
  log.completed = static_cast<int>(log.records.size()) == steps;
  return log;
}

namespace {

double Rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / v.size());
}

}  // namespace

Metrics ComputeMetrics(const SimLog& log, const MetricWindows& windows) {
  Metrics m;
  const double ts = log.sample_time;
  const int nl = static_cast<int>(log.locations.size());
  const double t_end = log.records.empty() ? 0.0 : log.records.back().t + ts;
  double thrust_sq = 0.0;
  int solves = 0;
  for (const SimRecord& r : log.records) {
    m.energy_captured += r.gen_power * ts;
    m.max_solve_time = std::max(m.max_solve_time, r.solve_time);
    m.mean_solve_time += r.solve_time;
    ++solves;
    if (r.mode == ToString(ControlMode::kHold)) ++m.hold_steps;
    if (r.mode == ToString(ControlMode::kNoTerminal)) ++m.no_terminal_steps;
    thrust_sq += (r.thrust - r.thrust_model) * (r.thrust - r.thrust_model);
    m.max_steady_state_residual =
        std::max(m.max_steady_state_residual, r.steady_state_residual);
    m.max_torque_roundtrip =
        std::max(m.max_torque_roundtrip, r.torque_roundtrip);
    m.max_pitch_roundtrip = std::max(m.max_pitch_roundtrip, r.pitch_roundtrip);
  }
  if (log.records.size() > 1) {
    const double eta = log.generator_efficiency;
    auto net = [eta](const SimRecord& r) {
      return r.rotor_power - r.gen_power / eta;
    };
    double integral = 0.0;
    for (std::size_t k = 1; k < log.records.size(); ++k) {
      const SimRecord& a = log.records[k - 1];
      const SimRecord& b = log.records[k];
      integral += 0.5 * ts * (net(a) + net(b));
      m.energy_throughput += 0.5 * ts * (a.gen_power + b.gen_power) / eta;
    }
    m.energy_balance_error = std::abs(log.records.back().energy -
                                      log.records.front().energy - integral);
  }
  if (solves > 0) {
    m.mean_solve_time /= solves;
    m.rms_thrust_error = std::sqrt(thrust_sq / solves);
  }
  for (const WindPlateau& p : log.plateaus) {
    if (p.end > t_end + 1e-9) break;
    PlateauMetrics pm;
    pm.speed = p.speed;
    const double settle_from =
        p.end - windows.settled_fraction * (p.end - p.start);
    const double transient_to = std::min(p.end, p.start + windows.transient);
    double pg = 0.0, om = 0.0, tail = 0.0;
    int n_settled = 0, n_all = 0;
    std::vector<std::vector<double>> vel(nl), tf(nl);
    pm.peak_velocity = Eigen::VectorXd::Zero(nl);
    for (const SimRecord& r : log.records) {
      if (r.t < p.start - 1e-9 || r.t >= p.end - 1e-9) continue;
      ++n_all;
      tail += r.tail_distance;
      pm.max_terminal_gap = std::max(pm.max_terminal_gap, r.terminal_gap);
      if (r.t >= settle_from - 1e-9) {
        pg += r.gen_power;
        om += r.omega_g;
        ++n_settled;
      }
      if (r.t < transient_to - 1e-9) {
        for (int l = 0; l < nl; ++l) {
          vel[l].push_back(r.v_p(l));
          tf[l].push_back(r.tfam_rate(l));
          pm.peak_velocity(l) =
              std::max(pm.peak_velocity(l), std::abs(r.v_p(l)));
        }
      }
    }
    if (n_settled > 0) {
      pm.steady_gen_power = pg / n_settled;
      pm.steady_omega_g = om / n_settled;
    }
    if (n_all > 0) pm.mean_tail_distance = tail / n_all;
    pm.rms_velocity.resize(nl);
    pm.rms_tfam_rate.resize(nl);
    for (int l = 0; l < nl; ++l) {
      pm.rms_velocity(l) = Rms(vel[l]);
      pm.rms_tfam_rate(l) = Rms(tf[l]);
    }
    m.plateaus.push_back(pm);
  }
  return m;
}

}  // namespace wt_empc
