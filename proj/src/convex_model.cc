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

#include "wt_empc/convex_model.h"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"

namespace wt_empc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double Thrust(double wind, double rotor_power, double energy,
              const CoeffSurface& ct, const CoeffSurface& cp,
              const TurbineParams& params) {
  const double beta = PitchInverse(rotor_power, wind, energy, cp, params);
  const double omega = OmegaFromEnergy(energy, params.EquivalentInertia());
  return ThrustForce(omega, beta, wind, ct, params);
}

}  // namespace

ThrustLinearization FitAffineThrust(const std::vector<ThrustSample>& samples,
                                    const std::optional<ThrustSample>& anchor) {
  const int n = static_cast<int>(samples.size());
  if (n < 3) throw ConstructionError("thrust fit needs at least 3 samples");
  // Centre and scale the regressors; P_r and K differ by decades.
  double mean[2] = {0.0, 0.0};
  for (const auto& s : samples) {
    mean[0] += s.rotor_power / n;
    mean[1] += s.energy / n;
  }
  double spread[2] = {0.0, 0.0};
  for (const auto& s : samples) {
    spread[0] = std::max(spread[0], std::abs(s.rotor_power - mean[0]));
    spread[1] = std::max(spread[1], std::abs(s.energy - mean[1]));
  }
  if (!(spread[0] > 0.0) || !(spread[1] > 0.0)) {
    throw ConstructionError("thrust samples do not vary in both P_r and K");
  }
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = (samples[i].rotor_power - mean[0]) / spread[0];
    design(i, 1) = (samples[i].energy - mean[1]) / spread[1];
    design(i, 2) = 1.0;
    rhs(i) = samples[i].thrust;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw ConstructionError("thrust fit is rank deficient");
  const Eigen::Vector3d coef = qr.solve(rhs);

  ThrustLinearization lin;
  lin.zeta1 = coef(0) / spread[0];
  lin.zeta2 = coef(1) / spread[1];
  lin.zeta3 = coef(2) - lin.zeta1 * mean[0] - lin.zeta2 * mean[1];
  if (anchor) {
    lin.zeta3 = anchor->thrust - lin.zeta1 * anchor->rotor_power -
                lin.zeta2 * anchor->energy;
  }
  double sq = 0.0;
  for (const auto& s : samples) {
    const double r = s.thrust - lin(s.rotor_power, s.energy);
    sq += r * r;
  }
  lin.fit_residual = std::sqrt(sq / n);
  lin.num_samples = n;
  return lin;
}

ThrustLinearization FitThrustLinearization(double wind, const CoeffSurface& ct,
                                           const CoeffSurface& cp,
                                           const TurbineParams& params,
                                           const ThrustFitWindow& window) {
  if (!(window.k_hi > window.k_lo) || !(window.pr_hi >= window.pr_lo) ||
      window.num_k < 2 || window.num_pr < 2 || !(window.k_lo > 0.0)) {
    throw std::invalid_argument("bad thrust fit window");
  }
  std::vector<ThrustSample> samples;
  for (int i = 0; i < window.num_k; ++i) {
    const double k =
        window.k_lo + (window.k_hi - window.k_lo) * i / (window.num_k - 1);
    const double p_av = AvailablePower(wind, k, cp, params).value;
    for (int j = 0; j < window.num_pr; ++j) {
      const double pr = window.pr_lo +
                        (window.pr_hi - window.pr_lo) * j / (window.num_pr - 1);
      if (pr < 0.0 || pr > p_av) continue;
      samples.push_back({pr, k, Thrust(wind, pr, k, ct, cp, params)});
    }
  }
  std::optional<ThrustSample> anchor;
  if (window.anchor) {
    const auto [pr0, k0] = *window.anchor;
    const double p_av = AvailablePower(wind, k0, cp, params).value;
    const double pr = std::clamp(pr0, 0.0, p_av);
    anchor = ThrustSample{pr0, k0, Thrust(wind, pr, k0, ct, cp, params)};
  }
  ThrustLinearization lin = FitAffineThrust(samples, anchor);
  lin.valid_wind = wind;
  return lin;
}

LtiModel AssembleLti(const ModalSystem& system, const ThrustLinearization& lin,
                     const TurbineParams& params) {
  const int nm = system.num_modes();
  const int n = 2 * nm + 1;
  LtiModel m;
  m.a = Eigen::MatrixXd::Zero(n, n);
  m.b = Eigen::MatrixXd::Zero(n, 2);
  m.c = Eigen::VectorXd::Zero(n);
  m.b(0, 0) = 1.0;
  m.b(0, 1) = -1.0 / params.generator_efficiency;
  for (int i = 0; i < nm; ++i) {
    const int xi = 1 + i;
    const int vi = 1 + nm + i;
    const double bi = system.input(i);
    m.a(xi, vi) = 1.0;
    m.a(vi, 0) = bi * lin.zeta2;
    m.a(vi, xi) = -system.stiffness(i) / system.mass(i);
    m.a(vi, vi) = -system.damping(i) / system.mass(i);
    m.b(vi, 0) = bi * lin.zeta1;
    m.c(vi) = bi * lin.zeta3;
  }
  return m;
}

DiscreteModel Discretize(const LtiModel& model, double sample_time) {
  if (!(sample_time > 0.0)) {
    throw std::invalid_argument("sample time must be positive");
  }
  const int n = model.num_states();
  const int m = static_cast<int>(model.b.cols());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m + 1, n + m + 1);
  aug.topLeftCorner(n, n) = model.a;
  aug.block(0, n, n, m) = model.b;
  aug.block(0, n + m, n, 1) = model.c;
  const Eigen::MatrixXd e = (aug * sample_time).exp();
  DiscreteModel d;
  d.a = e.topLeftCorner(n, n);
  d.b = e.block(0, n, n, m);
  d.c = e.block(0, n + m, n, 1);
  d.sample_time = sample_time;
  return d;
}

double ConvexConstraintSet::MaxViolation(int q,
                                         const Eigen::VectorXd& z) const {
  double worst = 0.0;
  for (const auto& row : stages.at(q)) {
    double v = 0.0;
    for (const auto& [idx, coeff] : row.coeffs) v += coeff * z(idx);
    worst = std::max({worst, row.lower - v, v - row.upper});
  }
  return worst;
}

ConvexConstraintSet BuildConstraints(const TurbineParams& params,
                                     const PwlEnvelope& available_power,
                                     const PwlEnvelope& max_thrust,
                                     const ThrustLinearization& lin,
                                     int num_states,
                                     const std::vector<double>& wind_forecast,
                                     const ConstraintOptions& options) {
  if (wind_forecast.empty()) {
    throw std::invalid_argument("wind forecast is empty");
  }
  const double j = params.EquivalentInertia();
  ConvexConstraintSet set;
  set.layout.num_states = num_states;
  set.k_min = KineticEnergy(params.omega_g_min, j);
  set.k_max = KineticEnergy(params.omega_g_max, j);
  set.k_rated = KineticEnergy(params.omega_g_rated, j);
  set.with_slack = options.with_slack;
  const StageLayout& l = set.layout;
  const std::vector<AffineCut> torque_cuts =
      TorqueLimitCuts(params, set.k_min, set.k_max, options.num_torque_cuts);

  for (std::size_t q = 0; q < wind_forecast.size(); ++q) {
    const double v = wind_forecast[q];
    if (!(v > 0.0)) throw std::invalid_argument("forecast wind must be > 0");
    std::vector<LinearRow> rows;
    rows.push_back({{{l.next_energy(), 1.0}}, set.k_min, set.k_max, "energy"});
    if (options.with_slack) {
      rows.push_back({{{l.next_energy(), 1.0}, {l.slack(), -1.0}},
                      -kInf,
                      set.k_rated,
                      "overspeed"});
      if (q == 0) rows.push_back({{{l.slack(), 1.0}}, 0.0, kInf, "slack"});
    } else {
      rows.push_back(
          {{{l.next_energy(), 1.0}}, -kInf, set.k_rated, "overspeed"});
    }
    rows.push_back({{{l.rotor_power(), 1.0}}, 0.0, kInf, "rotor_power"});
    rows.push_back({{{l.rotor_power(), 1.0}, {l.epigraph(), -1.0}},
                    -kInf,
                    0.0,
                    "epigraph"});
    for (const auto& c : available_power.CombinedCuts(v)) {
      rows.push_back({{{l.epigraph(), 1.0}, {l.energy(), -c.slope}},
                      -kInf,
                      c.intercept,
                      "available_power"});
    }
    rows.push_back(
        {{{l.gen_power(), 1.0}}, 0.0, params.power_g_rated, "gen_power"});
    for (const auto& c : torque_cuts) {
      rows.push_back({{{l.gen_power(), 1.0}, {l.next_energy(), -c.slope}},
                      -kInf,
                      c.intercept,
                      "torque"});
    }
    rows.push_back({{{l.rotor_power(), lin.zeta1}, {l.energy(), lin.zeta2}},
                    -lin.zeta3,
                    kInf,
                    "thrust_lower"});
    for (const auto& c : max_thrust.CombinedCuts(v)) {
      rows.push_back(
          {{{l.rotor_power(), lin.zeta1}, {l.energy(), lin.zeta2 - c.slope}},
           -kInf,
           c.intercept - lin.zeta3,
           "thrust_upper"});
    }
    set.stages.push_back(std::move(rows));
  }
  return set;
}

}  // namespace wt_empc
