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

#ifndef WT_EMPC_TESTS_TEST_UTIL_H_
#define WT_EMPC_TESTS_TEST_UTIL_H_

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {
namespace testing {

inline CoeffSurface ConstantSurface(double value, CoeffKind kind) {
  const std::vector<double> lambdas = {0.5, 5.0, 40.0};
  const std::vector<double> betas = {0.0, 0.4, 0.8};
  return CoeffSurface(lambdas, betas, Eigen::MatrixXd::Constant(3, 3, value),
                      kind);
}

// Parameters with rho A = 2 and unit gearbox, inertia and efficiency.
inline TurbineParams UnitParams() {
  TurbineParams p;
  p.air_density = 2.0;
  p.rotor_diameter = 2.0 / std::sqrt(std::numbers::pi);  // A = 1
  p.gearbox_ratio = 1.0;
  p.rotor_inertia = 0.5;
  p.generator_inertia = 0.5;  // J = 1
  p.generator_efficiency = 1.0;
  p.omega_g_min = 0.1;
  p.omega_g_rated = 10.0;
  p.omega_g_max = 20.0;
  p.beta_min = 0.0;
  p.beta_max = 0.8;
  return p;
}

inline const CoeffSurface& DefaultCp() {
  static const CoeffSurface* cp =
      new CoeffSurface(MakeAnalyticPowerSurface(DefaultLambdaGrid(),
                                                DefaultBetaGrid()));
  return *cp;
}

inline const CoeffSurface& DefaultCt() {
  static const CoeffSurface* ct =
      new CoeffSurface(MakeMomentumThrustSurface(DefaultCp()));
  return *ct;
}

}  // namespace testing
}  // namespace wt_empc

#endif  // WT_EMPC_TESTS_TEST_UTIL_H_
