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

// Linear prediction model in the energy state x = [K, x_m, v_m] with inputs
// u = [P_r, P_g], and the affine stage constraints built around it.

#ifndef WT_EMPC_CONVEX_MODEL_H_
#define WT_EMPC_CONVEX_MODEL_H_

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/pwl_envelope.h"
#include "wt_empc/tower_modal.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

// F_T ~ zeta1 P_r + zeta2 K + zeta3.
struct ThrustLinearization {
  double zeta1 = 0.0;  // N/W
  double zeta2 = 0.0;  // N/J
  double zeta3 = 0.0;  // N
  double valid_wind = 0.0;
  double fit_residual = 0.0;  // N, RMS over the samples
  int num_samples = 0;

  double operator()(double rotor_power, double energy) const {
    return zeta1 * rotor_power + zeta2 * energy + zeta3;
  }
};

struct ThrustSample {
  double rotor_power;
  double energy;
  double thrust;
};

// Least-squares affine fit. With `anchor`, the intercept is re-set so the
// fit passes through that sample exactly. Throws ConstructionError if the
// samples do not determine both slopes.
ThrustLinearization FitAffineThrust(const std::vector<ThrustSample>& samples,
                                    const std::optional<ThrustSample>& anchor);

struct ThrustFitWindow {
  double k_lo = 0.0, k_hi = 0.0;    // J
  double pr_lo = 0.0, pr_hi = 0.0;  // W
  int num_k = 9;
  int num_pr = 9;
  // Operating point the intercept is anchored to, if any.
  std::optional<std::pair<double, double>> anchor;  // (P_r, K)
};

// Samples F_T(P_r, K) at fixed wind with the pitch recovered by the pitch
// inverse; targets above the available power are skipped.
ThrustLinearization FitThrustLinearization(double wind, const CoeffSurface& ct,
                                           const CoeffSurface& cp,
                                           const TurbineParams& params,
                                           const ThrustFitWindow& window);

// Continuous model dx/dt = A x + B u + c.
struct LtiModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::VectorXd c;

  int num_states() const { return static_cast<int>(a.rows()); }
  int num_modes() const { return (num_states() - 1) / 2; }
};

// x(k+1) = A_d x(k) + B_d u(k) + c_d under zero-order hold.
struct DiscreteModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::VectorXd c;
  double sample_time = 0.0;

  int num_states() const { return static_cast<int>(a.rows()); }
  int num_modes() const { return (num_states() - 1) / 2; }
};

LtiModel AssembleLti(const ModalSystem& system, const ThrustLinearization& lin,
                     const TurbineParams& params);

// Exact ZOH through the exponential of the augmented matrix [[A B c];[0]].
DiscreteModel Discretize(const LtiModel& model, double sample_time);

// Index layout of the variables a single stage constraint may touch: the
// state x(q), inputs u(q), the available-power epigraph t(q), the overspeed
// slack, and the energy at the end of the step K(q+1).
struct StageLayout {
  int num_states = 0;

  int energy() const { return 0; }
  int modal_disp(int i) const { return 1 + i; }
  int modal_vel(int i) const { return 1 + (num_states - 1) / 2 + i; }
  int rotor_power() const { return num_states; }
  int gen_power() const { return num_states + 1; }
  int epigraph() const { return num_states + 2; }
  int slack() const { return num_states + 3; }
  int next_energy() const { return num_states + 4; }
  int size() const { return num_states + 5; }
};

// lower <= sum coeffs[k].second * z[coeffs[k].first] <= upper.
struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  double lower;
  double upper;
  const char* tag;
};

struct ConstraintOptions {
  bool with_slack = true;
  int num_torque_cuts = 8;
};

// Affine stage constraints for each step of the horizon.
struct ConvexConstraintSet {
  StageLayout layout;
  std::vector<std::vector<LinearRow>> stages;
  double k_min = 0.0, k_max = 0.0, k_rated = 0.0;
  bool with_slack = true;

  // Largest violation of stage q's rows at stage vector z.
  double MaxViolation(int q, const Eigen::VectorXd& z) const;
};

// Per stage: speed-limit energy bounds and the soft overspeed bound on
// K(q+1); 0 <= P_r <= t <= P_av envelope at (v(q), K(q)); 0 <= P_g <=
// P_rated and the torque-limit cuts in K(q+1); 0 <= F_T model <= F_T,max
// envelope at (v(q), K(q)). Throws std::invalid_argument on an empty
// forecast.
ConvexConstraintSet BuildConstraints(const TurbineParams& params,
                                     const PwlEnvelope& available_power,
                                     const PwlEnvelope& max_thrust,
                                     const ThrustLinearization& lin,
                                     int num_states,
                                     const std::vector<double>& wind_forecast,
                                     const ConstraintOptions& options);

}  // namespace wt_empc

#endif  // WT_EMPC_CONVEX_MODEL_H_
