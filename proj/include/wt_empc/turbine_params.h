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

#ifndef WT_EMPC_TURBINE_PARAMS_H_
#define WT_EMPC_TURBINE_PARAMS_H_

#include <iosfwd>
#include <map>
#include <numbers>
#include <string>

namespace wt_empc {

// Physical constants and operating limits of the turbine, SI units.
// Defaults follow the 5 MW reference machine (126 m rotor, 97:1 gearbox).
struct TurbineParams {
  double air_density = 1.225;           // kg/m^3
  double rotor_diameter = 126.0;        // m
  double gearbox_ratio = 97.0;          // -
  double rotor_inertia = 38759236.0;    // kg m^2, low-speed shaft
  double generator_inertia = 534.116;   // kg m^2, high-speed shaft
  double generator_efficiency = 0.944;  // -
  double omega_g_min = 70.16;           // rad/s (670 rpm)
  double omega_g_rated = 122.9096;      // rad/s (1173.7 rpm)
  double omega_g_max = 135.0;           // rad/s
  double torque_g_max = 47402.91;       // N m
  double beta_min = 0.0;                // rad
  double beta_max = 45.0 * std::numbers::pi / 180.0;  // rad
  double power_g_rated = 5.0e6;                       // W

  double RotorArea() const {
    return std::numbers::pi * rotor_diameter * rotor_diameter / 4.0;
  }

  // J = J_g + J_r / G^2, always recomputed from the two shaft inertias.
  double EquivalentInertia() const {
    return generator_inertia + rotor_inertia / (gearbox_ratio * gearbox_ratio);
  }

  // Throws std::invalid_argument on any violated range or ordering.
  void Validate() const;
};

// Applies `name = value` pairs onto `params`. Unknown names throw ParseError.
void ApplyTurbineParam(const std::string& name, double value,
                       TurbineParams* params);

// Flat key-value format: one `name = value` per line, `#` starts a comment.
TurbineParams ParseTurbineParams(std::istream& in);
TurbineParams LoadTurbineParams(const std::string& path);
void WriteTurbineParams(std::ostream& out, const TurbineParams& params);

}  // namespace wt_empc

#endif  // WT_EMPC_TURBINE_PARAMS_H_
