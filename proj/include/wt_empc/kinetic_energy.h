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

#ifndef WT_EMPC_KINETIC_ENERGY_H_
#define WT_EMPC_KINETIC_ENERGY_H_

#include <cmath>
#include <stdexcept>

namespace wt_empc {

// K = J w^2 / 2, the rotational energy stored at the generator shaft.
inline double KineticEnergy(double omega_g, double inertia) {
  if (omega_g < 0.0) throw std::domain_error("negative generator speed");
  return 0.5 * inertia * omega_g * omega_g;
}

inline double OmegaFromEnergy(double energy, double inertia) {
  if (energy < 0.0) throw std::domain_error("negative kinetic energy");
  return std::sqrt(2.0 * energy / inertia);
}

}  // namespace wt_empc

#endif  // WT_EMPC_KINETIC_ENERGY_H_
