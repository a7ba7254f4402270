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

// Nonlinear rotor/drive-train plant: aerodynamic lookups, powers, the
// available-power and max-thrust envelopes, and the pitch inverse map.

#ifndef WT_EMPC_AERO_DRIVETRAIN_H_
#define WT_EMPC_AERO_DRIVETRAIN_H_

#include "wt_empc/coeff_surface.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

struct DriveTrainState {
  double omega_g = 0.0;  // rad/s
};

// lambda = omega_g D_r / (2 G v_w). Throws std::domain_error for v_w <= 0.
double TipSpeedRatio(double omega_g, double wind, const TurbineParams& params);

double RotorTorque(double omega_g, double beta, double wind,
                   const CoeffSurface& cp, const TurbineParams& params);
double RotorPower(double omega_g, double beta, double wind,
                  const CoeffSurface& cp, const TurbineParams& params);
double GeneratorPower(double torque_g, double omega_g,
                      const TurbineParams& params);

// Maximum of the surface over the pitch grid nodes inside
// [beta_min, beta_max], at the tip-speed ratio implied by (wind, energy).
struct PitchMaximum {
  double value = 0.0;  // W for power, N for thrust
  double beta = 0.0;   // maximizing pitch (largest one on ties)
};

PitchMaximum AvailablePower(double wind, double energy, const CoeffSurface& cp,
                            const TurbineParams& params);
PitchMaximum MaxThrust(double wind, double energy, const CoeffSurface& ct,
                       const TurbineParams& params);

// Largest pitch in [beta_min, beta_max] at which the rotor delivers
// `target_power`. Throws InfeasibleTargetError when the target exceeds the
// available power. If the target is below the least power reachable inside
// the pitch range, returns the (largest) pitch of that minimum.
double PitchInverse(double target_power, double wind, double energy,
                    const CoeffSurface& cp, const TurbineParams& params);

// Time derivative of the generator speed, (T_r/G - T_g)/J.
double DriveTrainAcceleration(double omega_g, double torque_g, double beta,
                              double wind, const CoeffSurface& cp,
                              const TurbineParams& params);

// One explicit RK4 step of length dt with the inputs held. Throws StallError
// if the speed reaches zero at any stage.
DriveTrainState DriveTrainStep(const DriveTrainState& state, double torque_g,
                               double beta, double wind, double dt,
                               const CoeffSurface& cp,
                               const TurbineParams& params);

}  // namespace wt_empc

#endif  // WT_EMPC_AERO_DRIVETRAIN_H_
