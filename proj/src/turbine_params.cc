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

#include "wt_empc/turbine_params.h"

#include <boost/algorithm/string/trim.hpp>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

struct FieldEntry {
  const char* name;
  double TurbineParams::* member;
};

constexpr FieldEntry kFields[] = {
    {"air_density", &TurbineParams::air_density},
    {"rotor_diameter", &TurbineParams::rotor_diameter},
    {"gearbox_ratio", &TurbineParams::gearbox_ratio},
    {"rotor_inertia", &TurbineParams::rotor_inertia},
    {"generator_inertia", &TurbineParams::generator_inertia},
    {"generator_efficiency", &TurbineParams::generator_efficiency},
    {"omega_g_min", &TurbineParams::omega_g_min},
    {"omega_g_rated", &TurbineParams::omega_g_rated},
    {"omega_g_max", &TurbineParams::omega_g_max},
    {"torque_g_max", &TurbineParams::torque_g_max},
    {"beta_min", &TurbineParams::beta_min},
    {"beta_max", &TurbineParams::beta_max},
    {"power_g_rated", &TurbineParams::power_g_rated},
};

void RequirePositive(double value, const char* name) {
  if (!(value > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be positive");
  }
}

}  // namespace

void TurbineParams::Validate() const {
  RequirePositive(air_density, "air_density");
  RequirePositive(rotor_diameter, "rotor_diameter");
  RequirePositive(rotor_inertia, "rotor_inertia");
  RequirePositive(generator_inertia, "generator_inertia");
  RequirePositive(omega_g_min, "omega_g_min");
  RequirePositive(torque_g_max, "torque_g_max");
  RequirePositive(power_g_rated, "power_g_rated");
  if (gearbox_ratio < 1.0) {
    throw std::invalid_argument("gearbox_ratio must be >= 1");
  }
  if (!(generator_efficiency > 0.0 && generator_efficiency <= 1.0)) {
    throw std::invalid_argument("generator_efficiency must lie in (0, 1]");
  }
  if (!(omega_g_min < omega_g_rated && omega_g_rated <= omega_g_max)) {
    throw std::invalid_argument(
        "need omega_g_min < omega_g_rated <= omega_g_max");
  }
  if (!(beta_min < beta_max)) {
    throw std::invalid_argument("need beta_min < beta_max");
  }
}

void ApplyTurbineParam(const std::string& name, double value,
                       TurbineParams* params) {
  for (const auto& field : kFields) {
    if (name == field.name) {
      params->*field.member = value;
      return;
    }
  }
  throw ParseError("unknown turbine parameter '" + name + "'");
}

TurbineParams ParseTurbineParams(std::istream& in) {
  TurbineParams params;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected name = value");
    }
    std::string name = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    boost::algorithm::trim(name);
    boost::algorithm::trim(value);
    double parsed = 0.0;
    try {
      std::size_t used = 0;
      parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                       value + "'");
    }
    ApplyTurbineParam(name, parsed, &params);
  }
  params.Validate();
  return params;
}

TurbineParams LoadTurbineParams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open turbine parameter file " + path);
  return ParseTurbineParams(in);
}

void WriteTurbineParams(std::ostream& out, const TurbineParams& params) {
  out << std::setprecision(17);
  for (const auto& field : kFields) {
    out << field.name << " = " << params.*field.member << "\n";
  }
}

}  // namespace wt_empc
