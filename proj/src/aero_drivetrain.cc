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

#include "wt_empc/aero_drivetrain.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"

namespace wt_empc {
namespace {

struct PitchSample {
  double beta;
  double value;
};

// Coefficient values along the pitch axis at fixed lambda, restricted to
// [beta_min, beta_max]. The surface is linear between pitch nodes, so
// sampling the nodes plus the two range ends describes the slice exactly.
std::vector<PitchSample> PitchSlice(const CoeffSurface& surface, double lambda,
                                    const TurbineParams& params) {
  std::vector<PitchSample> out;
  const auto& grid = surface.beta_grid();
  const double lo = params.beta_min;
  const double hi = params.beta_max;
  if (lo > grid.front() && lo < grid.back()) {
    out.push_back({lo, surface.Lookup(lambda, lo)});
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] >= lo && grid[j] <= hi) {
      out.push_back({grid[j], surface.AtBetaNode(lambda, static_cast<int>(j))});
    }
  }
  if (hi < grid.back() && hi > grid.front() &&
      (out.empty() || out.back().beta < hi)) {
    out.push_back({hi, surface.Lookup(lambda, hi)});
  }
  if (out.empty()) {
    // Pitch range lies outside the table: the clamped edge value applies.
    out.push_back({lo, surface.Lookup(lambda, lo)});
    out.push_back({hi, surface.Lookup(lambda, hi)});
  }
  return out;
}

double LambdaFromEnergy(double wind, double energy,
                        const TurbineParams& params) {
  return TipSpeedRatio(OmegaFromEnergy(energy, params.EquivalentInertia()),
                       wind, params);
}

PitchMaximum MaximizeOverPitch(const CoeffSurface& surface, double lambda,
                               double scale, const TurbineParams& params) {
  PitchMaximum best{-1.0, params.beta_min};
  for (const auto& s : PitchSlice(surface, lambda, params)) {
    if (s.value >= best.value) best = {s.value, s.beta};
  }
  best.value *= scale;
  return best;
}

void RequirePositiveSpeed(double omega_g) {
  if (!(omega_g > 0.0)) {
    std::ostringstream msg;
    msg << "generator speed " << omega_g << " rad/s is not positive";
    throw StallError(msg.str());
  }
}

}  // namespace

double TipSpeedRatio(double omega_g, double wind, const TurbineParams& params) {
  if (!(wind > 0.0)) throw std::domain_error("wind speed must be positive");
  return omega_g * params.rotor_diameter / (2.0 * params.gearbox_ratio * wind);
}

double RotorPower(double omega_g, double beta, double wind,
                  const CoeffSurface& cp, const TurbineParams& params) {
  const double lambda = TipSpeedRatio(omega_g, wind, params);
  return 0.5 * params.air_density * params.RotorArea() *
         cp.Lookup(lambda, beta) * wind * wind * wind;
}

double RotorTorque(double omega_g, double beta, double wind,
                   const CoeffSurface& cp, const TurbineParams& params) {
  RequirePositiveSpeed(omega_g);
  const double omega_r = omega_g / params.gearbox_ratio;
  return RotorPower(omega_g, beta, wind, cp, params) / omega_r;
}

double GeneratorPower(double torque_g, double omega_g,
                      const TurbineParams& params) {
  return params.generator_efficiency * torque_g * omega_g;
}

PitchMaximum AvailablePower(double wind, double energy, const CoeffSurface& cp,
                            const TurbineParams& params) {
  const double lambda = LambdaFromEnergy(wind, energy, params);
  const double scale =
      0.5 * params.air_density * params.RotorArea() * wind * wind * wind;
  return MaximizeOverPitch(cp, lambda, scale, params);
}

PitchMaximum MaxThrust(double wind, double energy, const CoeffSurface& ct,
                       const TurbineParams& params) {
  const double lambda = LambdaFromEnergy(wind, energy, params);
  const double scale =
      0.5 * params.air_density * params.RotorArea() * wind * wind;
  return MaximizeOverPitch(ct, lambda, scale, params);
}

double PitchInverse(double target_power, double wind, double energy,
                    const CoeffSurface& cp, const TurbineParams& params) {
  const double lambda = LambdaFromEnergy(wind, energy, params);
  const double scale =
      0.5 * params.air_density * params.RotorArea() * wind * wind * wind;
  std::vector<PitchSample> slice = PitchSlice(cp, lambda, params);
  double p_max = 0.0;
  std::size_t i_min = 0;
  for (std::size_t k = 0; k < slice.size(); ++k) {
    slice[k].value *= scale;
    p_max = std::max(p_max, slice[k].value);
    if (slice[k].value <= slice[i_min].value) i_min = k;
  }
  if (target_power > p_max * (1.0 + 1e-12) + 1e-9) {
    std::ostringstream msg;
    msg << "target rotor power " << target_power << " W exceeds available "
        << p_max << " W at v_w=" << wind << " m/s";
    throw InfeasibleTargetError(msg.str());
  }
  const double t = std::min(target_power, p_max);
  // Scan cells from the feathered end so the first root found is the
  // largest pitch.
  for (std::size_t k = slice.size() - 1; k > 0; --k) {
    const PitchSample& lo = slice[k - 1];
    const PitchSample& hi = slice[k];
    if ((lo.value - t) * (hi.value - t) > 0.0) continue;
    const double dp = hi.value - lo.value;
    if (dp == 0.0) return hi.beta;
    const double w = std::clamp((t - lo.value) / dp, 0.0, 1.0);
    return lo.beta + w * (hi.beta - lo.beta);
  }
  if (slice.size() == 1 && slice[0].value == t) return slice[0].beta;
  // Target below everything reachable: feather to the least-power pitch.
  return slice[i_min].beta;
}

double DriveTrainAcceleration(double omega_g, double torque_g, double beta,
                              double wind, const CoeffSurface& cp,
                              const TurbineParams& params) {
  const double torque_r = RotorTorque(omega_g, beta, wind, cp, params);
  return (torque_r / params.gearbox_ratio - torque_g) /
         params.EquivalentInertia();
}

DriveTrainState DriveTrainStep(const DriveTrainState& state, double torque_g,
                               double beta, double wind, double dt,
                               const CoeffSurface& cp,
                               const TurbineParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  auto f = [&](double w) {
    return DriveTrainAcceleration(w, torque_g, beta, wind, cp, params);
  };
  const double w0 = state.omega_g;
  const double k1 = f(w0);
  const double k2 = f(w0 + 0.5 * dt * k1);
  const double k3 = f(w0 + 0.5 * dt * k2);
  const double k4 = f(w0 + dt * k3);
  const double w1 = w0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  RequirePositiveSpeed(w1);
  return {w1};
}

}  // namespace wt_empc
