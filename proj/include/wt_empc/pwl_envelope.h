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

// Concave piecewise-linear under-envelopes in the kinetic energy K,
// tabulated per wind speed and blended linearly between wind grid points.

#ifndef WT_EMPC_PWL_ENVELOPE_H_
#define WT_EMPC_PWL_ENVELOPE_H_

#include <iosfwd>
#include <utility>
#include <vector>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

// slope * K + intercept.
struct AffineCut {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double k) const { return slope * k + intercept; }
};

double MinOfCuts(const std::vector<AffineCut>& cuts, double k);

// Concave under-envelope of samples f(k_i): chords of the upper concave hull
// chosen to minimise the worst gap, each shifted down until it lies below
// every sample in its interval. Uses at most `num_segments` chords. Throws
// ConstructionError if the result is not below every sample.
std::vector<AffineCut> FitConcaveUnderestimator(const std::vector<double>& k,
                                                const std::vector<double>& f,
                                                int num_segments);

// Evaluates min_i(a_i K + b_i) v_j^p at each wind grid point v_j and
// blends linearly in v between the two bracketing grid points.
class PwlEnvelope {
 public:
  PwlEnvelope(std::vector<double> wind_grid,
              std::vector<std::vector<AffineCut>> cuts, int wind_exponent);

  // Index j and weight theta with v ~ (1 - theta) v_j + theta v_{j+1}.
  // Winds outside the grid clamp to its ends (theta 0 or 1).
  std::pair<int, double> Bracket(double wind) const;

  double EvalAtGrid(int j, double energy) const;
  double Eval(double wind, double energy) const;

  // All affine functions of K whose minimum equals Eval(wind, .): the
  // pairwise sums of the two blended cut families (a single family on a
  // grid point).
  std::vector<AffineCut> CombinedCuts(double wind) const;

  const std::vector<double>& wind_grid() const { return wind_grid_; }
  const std::vector<AffineCut>& cuts(int j) const { return cuts_[j]; }
  int wind_exponent() const { return wind_exponent_; }

 private:
  std::vector<double> wind_grid_;
  std::vector<std::vector<AffineCut>> cuts_;
  int wind_exponent_;
};

struct PwlGridSpec {
  std::vector<double> wind_grid;  // m/s, ascending
  std::vector<double> k_grid;     // J, ascending
  int num_segments = 5;
};

// Wind 3..25 m/s step 1, 200 K points between the speed-limit energies.
PwlGridSpec DefaultPwlGrid(const TurbineParams& params);

// P_av(v, K) / v^3 under-envelope (W per (m/s)^3).
PwlEnvelope BuildPwlAvailablePower(const CoeffSurface& cp,
                                   const TurbineParams& params,
                                   const PwlGridSpec& grid);
// F_T,max(v, K) / v^2 under-envelope (N per (m/s)^2).
PwlEnvelope BuildPwlMaxThrust(const CoeffSurface& ct,
                              const TurbineParams& params,
                              const PwlGridSpec& grid);

// Conservative affine cuts of P_g <= eta T_max sqrt(2K/J) on [k_lo, k_hi]:
// tangents at interval midpoints lowered by their worst gap on the interval.
std::vector<AffineCut> TorqueLimitCuts(const TurbineParams& params, double k_lo,
                                       double k_hi, int num_cuts);

// CSV with header `v_w,i,a_i,b_i`, i counted from 1.
void WritePwlCsv(std::ostream& out, const PwlEnvelope& envelope);
PwlEnvelope ReadPwlCsv(std::istream& in, int wind_exponent);

}  // namespace wt_empc

#endif  // WT_EMPC_PWL_ENVELOPE_H_
