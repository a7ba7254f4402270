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

// Self-checks of the model chain that need no closed-loop run: envelope
// underestimation, discretisation accuracy, QP optimality against
// enumeration, tower modal frequencies and steady-state fixed points.

#ifndef WT_EMPC_VALIDATION_H_
#define WT_EMPC_VALIDATION_H_

#include <string>
#include <vector>

#include "wt_empc/simulation.h"

namespace wt_empc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Envelope <= P_av on the default 23 x 200 (wind, K) grid, built and
// checked within 5 s.
CheckResult CheckPwlUnderestimation(const SimulationSetup& setup);

// ZOH step of the linearised model at `wind` against 1000 RK4 substeps over
// one sample, 1e-8 relative, within 1 s.
CheckResult CheckDiscretization(const SimulationSetup& setup,
                                double wind = 12.0);

// Random strictly convex QPs (n, m <= 8) against active-set enumeration to
// 1e-6, within 30 s.
CheckResult CheckQpAgainstEnumeration(int num_problems = 200,
                                      unsigned seed = 2024);

// Largest spectral peak near each configured frequency of the free tower
// response after a top impulse, within 2 %.
CheckResult CheckModalFrequencies(const TowerParams& tower);

// Fixed-point residual of the optimal steady state at each wind, in the
// controller's optimisation units, at most `tolerance`.
CheckResult CheckSteadyStates(const SimulationSetup& setup,
                              const std::vector<double>& winds,
                              double tolerance = 1e-8);

// Frequency (Hz) of the largest peak of |FFT| in [f_lo, f_hi] of a Hann
// windowed, zero padded signal, refined by a parabola through the log
// magnitudes.
double PeakFrequency(const std::vector<double>& signal, double dt, double f_lo,
                     double f_hi);

std::vector<CheckResult> RunValidation(const SimulationSetup& setup,
                                       const std::vector<double>& winds);

}  // namespace wt_empc

#endif  // WT_EMPC_VALIDATION_H_
