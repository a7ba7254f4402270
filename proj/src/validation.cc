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

#include "wt_empc/validation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/convex_model.h"
#include "wt_empc/empc_controller.h"
#include "wt_empc/pwl_envelope.h"
#include "wt_empc/qp_reference.h"
#include "wt_empc/qp_solver.h"
#include "wt_empc/tower_modal.h"

namespace wt_empc {
namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

}  // namespace

double PeakFrequency(const std::vector<double>& signal, double dt, double f_lo,
                     double f_hi) {
  const int n = static_cast<int>(signal.size());
  if (n < 4) throw std::invalid_argument("signal too short");
  int padded = 1;
  while (padded < 8 * n) padded *= 2;
  std::vector<double> windowed(padded, 0.0);
  for (int i = 0; i < n; ++i) {
    const double hann =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    windowed[i] = signal[i] * hann;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, windowed);
  const double df = 1.0 / (padded * dt);
  int best = -1;
  for (int k = 1; k < padded / 2 - 1; ++k) {
    const double f = k * df;
    if (f < f_lo || f > f_hi) continue;
    if (best < 0 || std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  if (best < 1) throw std::invalid_argument("empty frequency band");
  const double a = std::log(std::abs(spectrum[best - 1]));
  const double b = std::log(std::abs(spectrum[best]));
  const double c = std::log(std::abs(spectrum[best + 1]));
  const double denom = a - 2.0 * b + c;
  const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return (best + shift) * df;
}

CheckResult CheckPwlUnderestimation(const SimulationSetup& setup) {
  CheckResult r;
  r.name = "pwl_underestimation";
  const auto t0 = Clock::now();
  const TurbineParams& p = setup.turbine;
  PwlGridSpec grid = DefaultPwlGrid(p);
  const PwlEnvelope env = BuildPwlAvailablePower(*setup.tables.cp, p, grid);
  double worst_margin = std::numeric_limits<double>::infinity();
  int points = 0;
  for (double v : grid.wind_grid) {
    for (double k : grid.k_grid) {
      const double exact = AvailablePower(v, k, *setup.tables.cp, p).value;
      worst_margin = std::min(worst_margin, exact - env.Eval(v, k));
      ++points;
    }
  }
  r.seconds = Since(t0);
  r.passed = worst_margin >= 0.0 && r.seconds < 5.0 && points == 23 * 200;
  r.detail = Format("%.0f points, min margin %.3e W", points, worst_margin) +
             Format(", %.2f s", r.seconds);
  return r;
}

CheckResult CheckDiscretization(const SimulationSetup& setup, double wind) {
  CheckResult r;
  r.name = "zoh_discretization";
  const auto t0 = Clock::now();
  EmpcController ctrl(setup.turbine, setup.tower, setup.tables,
                      setup.controller);
  ctrl.UpdateOperatingPoint(wind);
  const LtiModel m = AssembleLti(ctrl.modal_system(),
                                 ctrl.prediction_model().thrust, setup.turbine);
  const double ts = setup.controller.sample_time;
  const DiscreteModel d = Discretize(m, ts);
  const SteadyState& ss = ctrl.steady_state();
  Eigen::VectorXd x0 = ss.x;
  for (int i = 1; i < x0.size(); ++i) x0(i) += 0.01 * (i % 2 ? 1.0 : -1.0);
  const Eigen::Vector2d u(ss.rotor_power * 1.05, ss.gen_power * 0.97);
  const Eigen::VectorXd zoh = d.a * x0 + d.b * u + d.c;
  const int steps = 1000;
  const double h = ts / steps;
  auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return m.a * s + m.b * u + m.c;
  };
  Eigen::VectorXd x = x0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    worst = std::max(worst,
                     std::abs(zoh(i) - x(i)) / std::max(std::abs(x(i)), 1.0));
  }
  r.seconds = Since(t0);
  r.passed = m.num_states() == 2 * ctrl.modal_system().num_modes() + 1 &&
             worst <= 1e-8 && r.seconds < 1.0;
  r.detail =
      Format("%.0f states, worst relative error %.3e", m.num_states(), worst) +
      Format(", %.3f s", r.seconds);
  return r;
}

CheckResult CheckQpAgainstEnumeration(int num_problems, unsigned seed) {
  CheckResult r;
  r.name = "qp_enumeration";
  const auto t0 = Clock::now();
  std::mt19937 rng(seed);
  QpSolver solver;
  double worst = 0.0;
  int failures = 0;
  for (int k = 0; k < num_problems; ++k) {
    const DenseQp p = RandomDenseQp(rng);
    const auto ref = EnumerateActiveSets(p);
    const QpSolution s = solver.Solve(ToSparse(p));
    if (!ref || s.status != QpStatus::kOptimal) {
      ++failures;
      continue;
    }
    for (int i = 0; i < ref->size(); ++i) {
      worst = std::max(
          worst, std::abs(s.x(i) - (*ref)(i)) / (1.0 + std::abs((*ref)(i))));
    }
  }
  r.seconds = Since(t0);
  r.passed = failures == 0 && worst <= 1e-6 && r.seconds < 30.0;
  r.detail =
      Format("%.0f problems, worst deviation %.3e", num_problems, worst) +
      Format(", %.0f failures, %.2f s", failures, r.seconds);
  return r;
}

CheckResult CheckModalFrequencies(const TowerParams& tower) {
  CheckResult r;
  r.name = "modal_frequencies";
  const auto t0 = Clock::now();
  const ModalSystem sys = BuildModalSystem(tower);
  const double f_max = *std::max_element(
      tower.frequencies.begin(), tower.frequencies.begin() + tower.num_modes);
  const double dt = std::min(0.005, 0.05 / f_max);
  ModalState s = ModalState::Zero(sys.num_modes());
  for (int i = 0; i < 4; ++i) s = ModalStep(sys, s, 2e6, dt);
  std::vector<double> top;
  const int samples = static_cast<int>(std::ceil(60.0 / dt));
  for (int i = 0; i < samples; ++i) {
    s = ModalStep(sys, s, 0.0, dt);
    top.push_back(ProjectToPhysical(sys, s).first(0));
  }
  r.passed = true;
  std::ostringstream detail;
  for (int i = 0; i < sys.num_modes(); ++i) {
    const double f = tower.frequencies[i];
    // Search band halfway to the neighbouring modes.
    const double lo = i > 0 ? 0.5 * (f + tower.frequencies[i - 1]) : 0.5 * f;
    const double hi = i + 1 < sys.num_modes()
                          ? 0.5 * (f + tower.frequencies[i + 1])
                          : 1.5 * f;
    const double peak = PeakFrequency(top, dt, lo, hi);
    const double err = std::abs(peak - f) / f;
    r.passed = r.passed && err <= 0.02;
    detail << (i ? "; " : "") << "mode " << i + 1 << " peak " << peak
           << " Hz vs " << f << " Hz (" << 100.0 * err << " %)";
  }
  r.seconds = Since(t0);
  r.detail = detail.str();
  return r;
}

CheckResult CheckSteadyStates(const SimulationSetup& setup,
                              const std::vector<double>& winds,
                              double tolerance) {
  CheckResult r;
  r.name = "steady_state_fixed_point";
  const auto t0 = Clock::now();
  EmpcController ctrl(setup.turbine, setup.tower, setup.tables,
                      setup.controller);
  double worst = 0.0;
  int failures = 0;
  for (double v : winds) {
    ctrl.UpdateOperatingPoint(v);
    const SteadyState& ss = ctrl.steady_state();
    if (ss.status != QpStatus::kOptimal) ++failures;
    worst = std::max(worst, ss.fixed_point_residual);
  }
  r.seconds = Since(t0);
  r.passed = failures == 0 && worst <= tolerance;
  r.detail = Format("%.0f winds, worst residual %.3e", winds.size(), worst) +
             Format(", %.0f solver failures", failures);
  return r;
}

std::vector<CheckResult> RunValidation(const SimulationSetup& setup,
                                       const std::vector<double>& winds) {
  return {CheckPwlUnderestimation(setup), CheckDiscretization(setup),
          CheckQpAgainstEnumeration(), CheckModalFrequencies(setup.tower),
          CheckSteadyStates(setup, winds)};
}

}  // namespace wt_empc
