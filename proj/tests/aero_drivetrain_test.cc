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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tests/test_util.h"
#include "wt_empc/coeff_surface.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {
namespace {

using testing::ConstantSurface;
using testing::DefaultCp;
using testing::UnitParams;

constexpr double kDeg = std::numbers::pi / 180.0;

TEST(TipSpeedRatio, UnitAlgebra) {
  TurbineParams p;
  p.rotor_diameter = 2.0;
  p.gearbox_ratio = 1.0;
  EXPECT_DOUBLE_EQ(TipSpeedRatio(2.0, 1.0, p), 2.0);
  p.gearbox_ratio = 3.0;
  const double v = 7.0;
  EXPECT_DOUBLE_EQ(TipSpeedRatio(p.gearbox_ratio * v * 2.0 / 2.0, v, p), 1.0);
}

TEST(TipSpeedRatio, ReferenceTurbineAtRatedSpeed) {
  // 122.9096 * 126 / (2 * 97 * 11.4) = 7.0024.
  EXPECT_NEAR(TipSpeedRatio(122.9096, 11.4, TurbineParams()), 7.0, 0.005);
}

TEST(TipSpeedRatio, RejectsNonPositiveWind) {
  EXPECT_THROW(TipSpeedRatio(100.0, 0.0, TurbineParams()), std::domain_error);
  EXPECT_THROW(TipSpeedRatio(100.0, -1.0, TurbineParams()), std::domain_error);
}

TEST(CoeffSurface, ExactAtNodesLinearInCellsClampedOutside) {
  const CoeffSurface s({1.0, 2.0}, {0.0, 0.1},
                       (Eigen::MatrixXd(2, 2) << 0.0, 0.0, 1.0, 1.0).finished(),
                       CoeffKind::kThrust);
  EXPECT_DOUBLE_EQ(s.Lookup(2.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(s.Lookup(1.5, 0.05), 0.5);
  EXPECT_DOUBLE_EQ(s.Lookup(5.0, 3.0), s.Lookup(2.0, 0.1));
  EXPECT_DOUBLE_EQ(s.Lookup(-1.0, -1.0), s.Lookup(1.0, 0.0));
  const CoeffSurface& cp = DefaultCp();
  for (int i = 0; i < 290; i += 37) {
    for (int j = 0; j < 91; j += 13) {
      EXPECT_EQ(cp.Lookup(cp.lambda_grid()[i], cp.beta_grid()[j]),
                cp.values()(i, j));
    }
  }
}

TEST(CoeffSurface, RejectsBadGrids) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(2, 2, 0.1);
  EXPECT_THROW(CoeffSurface({1.0, 1.0}, {0.0, 1.0}, v, CoeffKind::kPower),
               std::invalid_argument);
  EXPECT_THROW(CoeffSurface({1.0, 2.0, 3.0}, {0.0, 1.0}, v, CoeffKind::kPower),
               std::invalid_argument);
  EXPECT_THROW(
      CoeffSurface({1.0, 2.0}, {0.0, 1.0}, Eigen::MatrixXd::Constant(2, 2, 0.6),
                   CoeffKind::kPower),
      std::invalid_argument);
  EXPECT_NO_THROW(CoeffSurface({1.0, 2.0}, {0.0, 1.0},
                               Eigen::MatrixXd::Constant(2, 2, 1.9),
                               CoeffKind::kThrust));
}

TEST(CoeffSurface, DefaultSurfacesRespectPhysicalRanges) {
  const CoeffSurface& cp = DefaultCp();
  EXPECT_GE(cp.values().minCoeff(), 0.0);
  EXPECT_LE(cp.values().maxCoeff(), 0.593);
  // The analytic form peaks near lambda 8, zero pitch, at about 0.48.
  EXPECT_NEAR(cp.values().maxCoeff(), 0.48, 0.01);
  const CoeffSurface& ct = testing::DefaultCt();
  EXPECT_LE(ct.values().maxCoeff(), 8.0 / 9.0 + 1e-12);
  for (double c : {0.0, 0.1, 0.3, 0.5, 16.0 / 27.0}) {
    const double ctv = MomentumThrustCoefficient(c);
    const double a = 0.5 * (1.0 - std::sqrt(1.0 - ctv));
    EXPECT_NEAR(4.0 * a * (1.0 - a) * (1.0 - a), c, 1e-12);
  }
}

TEST(CoeffSurface, CsvRoundTripAndIncompleteGrid) {
  const CoeffSurface s(
      {1.0, 2.0, 3.0}, {0.0, 0.25},
      (Eigen::MatrixXd(3, 2) << 0.1, 0.2, 0.3, 0.4, 0.5, 0.1).finished(),
      CoeffKind::kPower);
  std::stringstream buf;
  WriteCoeffSurfaceCsv(buf, s);
  const CoeffSurface back = ReadCoeffSurfaceCsv(buf, CoeffKind::kPower);
  EXPECT_EQ(back.lambda_grid(), s.lambda_grid());
  EXPECT_EQ(back.beta_grid(), s.beta_grid());
  EXPECT_EQ(back.values(), s.values());

  std::stringstream missing(
      "lambda,beta,value\n1,0,0.1\n1,0.25,0.2\n2,0,0.3\n");
  EXPECT_THROW(ReadCoeffSurfaceCsv(missing, CoeffKind::kPower), ParseError);
  std::stringstream bad_header("l,b,v\n1,0,0.1\n");
  EXPECT_THROW(ReadCoeffSurfaceCsv(bad_header, CoeffKind::kPower), ParseError);
}

TEST(TurbineParams, ParseOverridesAndValidation) {
  std::stringstream in(
      "# comment\nrotor_diameter = 100  # m\n\ngearbox_ratio=50\n");
  const TurbineParams p = ParseTurbineParams(in);
  EXPECT_EQ(p.rotor_diameter, 100.0);
  EXPECT_EQ(p.gearbox_ratio, 50.0);
  EXPECT_DOUBLE_EQ(p.EquivalentInertia(),
                   p.generator_inertia + p.rotor_inertia / 2500.0);
  std::stringstream unknown("rotor_radius = 3\n");
  EXPECT_THROW(ParseTurbineParams(unknown), ParseError);
  std::stringstream crossed("omega_g_min = 200\n");
  EXPECT_THROW(ParseTurbineParams(crossed), std::invalid_argument);
  std::stringstream round_trip;
  WriteTurbineParams(round_trip, p);
  const TurbineParams q = ParseTurbineParams(round_trip);
  EXPECT_EQ(q.rotor_diameter, p.rotor_diameter);
  EXPECT_EQ(q.beta_max, p.beta_max);
}

TEST(RotorTorque, ZeroAndUnitCoefficient) {
  const TurbineParams p = UnitParams();
  const CoeffSurface zero = ConstantSurface(0.0, CoeffKind::kPower);
  EXPECT_EQ(RotorTorque(3.0, 0.2, 9.0, zero, p), 0.0);
  // rho A = 2, C_p = 0.5, v = 1, omega_r = 1: T_r = 2 * 0.5 / 2 = 0.5.
  const CoeffSurface half = ConstantSurface(0.5, CoeffKind::kPower);
  EXPECT_DOUBLE_EQ(RotorTorque(1.0, 0.0, 1.0, half, p), 0.5);
  EXPECT_THROW(RotorTorque(0.0, 0.0, 1.0, half, p), StallError);
}

TEST(RotorTorque, TorqueTimesRotorSpeedIsRotorPower) {
  const TurbineParams p;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> omega(60.0, 140.0), beta(0.0, 0.7),
      wind(3.0, 25.0);
  for (int i = 0; i < 500; ++i) {
    const double w = omega(rng), b = beta(rng), v = wind(rng);
    const double power = RotorPower(w, b, v, DefaultCp(), p);
    const double torque = RotorTorque(w, b, v, DefaultCp(), p);
    EXPECT_NEAR(torque * w / p.gearbox_ratio, power,
                1e-12 * std::max(1.0, std::abs(power)));
  }
}

TEST(GeneratorPower, UnitAlgebra) {
  TurbineParams p;
  EXPECT_EQ(GeneratorPower(0.0, 100.0, p), 0.0);
  p.generator_efficiency = 1.0;
  EXPECT_DOUBLE_EQ(GeneratorPower(2.0, 3.0, p), 6.0);
  const TurbineParams d;
  EXPECT_LE(GeneratorPower(d.torque_g_max, d.omega_g_rated, d),
            d.generator_efficiency * d.torque_g_max * d.omega_g_rated);
}

TEST(RotorPower, BetzLimitReferenceValue) {
  const TurbineParams p;
  const CoeffSurface betz = ConstantSurface(0.593, CoeffKind::kPower);
  // 0.5 * 1.225 * pi * 63^2 * 0.593 * 11.4^3 = 6.7097e6 W.
  EXPECT_NEAR(RotorPower(100.0, 0.0, 11.4, betz, p), 6.7097e6, 1e3);
}

TEST(AvailablePower, ConstantSurfaceIgnoresEnergy) {
  const TurbineParams p = UnitParams();
  const CoeffSurface c = ConstantSurface(0.4, CoeffKind::kPower);
  for (double k : {1.0, 10.0, 100.0}) {
    EXPECT_DOUBLE_EQ(AvailablePower(2.0, k, c, p).value, 0.4 * 8.0);
  }
}

TEST(AvailablePower, BoundsEveryPitchAndGrowsWithWind) {
  const TurbineParams p;
  const double j = p.EquivalentInertia();
  const CoeffSurface& cp = DefaultCp();
  for (double omega : {75.0, 100.0, 122.9, 134.0}) {
    const double k = KineticEnergy(omega, j);
    double previous = 0.0;
    for (double v = 3.0; v <= 25.0; v += 0.5) {
      const PitchMaximum best = AvailablePower(v, k, cp, p);
      for (double b : cp.beta_grid()) {
        EXPECT_LE(RotorPower(omega, b, v, cp, p), best.value * (1 + 1e-14));
      }
      // Around lambda 4 the analytic surface grows faster than lambda^3, so
      // growth with wind is only checked above that band.
      if (TipSpeedRatio(omega, v, p) >= 4.5) {
        EXPECT_GE(best.value, previous) << "omega " << omega << " v " << v;
      }
      previous = best.value;
    }
  }
}

TEST(MaxThrust, ZeroUnitAndBound) {
  const TurbineParams p = UnitParams();
  EXPECT_EQ(
      MaxThrust(3.0, 2.0, ConstantSurface(0.0, CoeffKind::kThrust), p).value,
      0.0);
  EXPECT_DOUBLE_EQ(
      MaxThrust(1.0, 2.0, ConstantSurface(1.0, CoeffKind::kThrust), p).value,
      1.0);
}

TEST(PitchInverse, RoundTripOnMonotoneSlice) {
  const TurbineParams p;
  const double k = KineticEnergy(p.omega_g_rated, p.EquivalentInertia());
  const double v = 16.0;
  const double omega = p.omega_g_rated;
  // Beyond the power-maximising pitch the slice decreases monotonically.
  const double beta_star = AvailablePower(v, k, DefaultCp(), p).beta / kDeg;
  for (double beta_deg : {10.0, 12.25, 15.0, 17.5, 20.0, 30.0}) {
    ASSERT_GT(beta_deg, beta_star);
    const double target = RotorPower(omega, beta_deg * kDeg, v, DefaultCp(), p);
    const double beta = PitchInverse(target, v, k, DefaultCp(), p);
    EXPECT_NEAR(beta, beta_deg * kDeg, 1e-9);
    EXPECT_NEAR(RotorPower(omega, beta, v, DefaultCp(), p), target,
                1e-6 * target);
  }
}

TEST(PitchInverse, AvailableTargetGivesArgmaxAndZeroGivesFeather) {
  const TurbineParams p;
  const double k = KineticEnergy(100.0, p.EquivalentInertia());
  const PitchMaximum best = AvailablePower(9.0, k, DefaultCp(), p);
  EXPECT_NEAR(PitchInverse(best.value, 9.0, k, DefaultCp(), p), best.beta,
              1e-12);
  // A slice with C_p = 0 at the largest pitch.
  const CoeffSurface s(
      {1.0, 30.0}, {0.0, 0.4, 0.8},
      (Eigen::MatrixXd(2, 3) << 0.4, 0.2, 0.0, 0.4, 0.2, 0.0).finished(),
      CoeffKind::kPower);
  TurbineParams q = p;
  q.beta_max = 0.8;
  EXPECT_DOUBLE_EQ(PitchInverse(0.0, 9.0, k, s, q), 0.8);
  EXPECT_THROW(PitchInverse(best.value * 1.01, 9.0, k, DefaultCp(), p),
               InfeasibleTargetError);
}

TEST(PitchInverse, PicksLargestRootAndStaysInRange) {
  // Power rises then falls along pitch: two roots for the same target.
  const CoeffSurface s(
      {1.0, 30.0}, {0.0, 0.2, 0.4},
      (Eigen::MatrixXd(2, 3) << 0.2, 0.4, 0.2, 0.2, 0.4, 0.2).finished(),
      CoeffKind::kPower);
  TurbineParams p = UnitParams();
  p.beta_max = 0.4;
  // rho A v^3 / 2 = 1 at v = 1, so the target is the coefficient itself.
  EXPECT_NEAR(PitchInverse(0.3, 1.0, 2.0, s, p), 0.3, 1e-12);
  p.beta_min = 0.05;
  p.beta_max = 0.3;
  const double b = PitchInverse(0.1, 1.0, 2.0, s, p);
  EXPECT_GE(b, p.beta_min);
  EXPECT_LE(b, p.beta_max);
}

TEST(DriveTrainStep, EquilibriumHolds) {
  const TurbineParams p;
  const double omega = 110.0, beta = 0.05, v = 10.0;
  const double tg =
      RotorTorque(omega, beta, v, DefaultCp(), p) / p.gearbox_ratio;
  const DriveTrainState next =
      DriveTrainStep({omega}, tg, beta, v, 0.05, DefaultCp(), p);
  EXPECT_NEAR(next.omega_g, omega, 1e-12 * omega);
}

TEST(DriveTrainStep, ConstantTorqueDecelerationMatchesClosedForm) {
  const TurbineParams p;
  const CoeffSurface zero = ConstantSurface(0.0, CoeffKind::kPower);
  const double j = p.EquivalentInertia();
  const double tg = 30000.0;
  DriveTrainState s{120.0};
  for (int i = 0; i < 40; ++i) {
    s = DriveTrainStep(s, tg, 0.0, 10.0, 0.05, zero, p);
  }
  const double expected = 120.0 - tg * 2.0 / j;
  EXPECT_NEAR(s.omega_g, expected, 1e-10 * expected);
}

TEST(DriveTrainStep, FourthOrderConvergence) {
  const TurbineParams p;
  // C_p affine in lambda keeps the right-hand side smooth.
  const CoeffSurface cp(
      {0.5, 40.0}, {0.0, 1.0},
      (Eigen::MatrixXd(2, 2) << 0.3 + 0.005 * 0.5, 0.3 + 0.005 * 0.5,
       0.3 + 0.005 * 40.0, 0.3 + 0.005 * 40.0)
          .finished(),
      CoeffKind::kPower);
  auto integrate = [&](int steps) {
    DriveTrainState s{80.0};
    for (int i = 0; i < steps; ++i) {
      s = DriveTrainStep(s, 20000.0, 0.0, 12.0, 4.0 / steps, cp, p);
    }
    return s.omega_g;
  };
  const double ref = integrate(2048);
  const double e1 = std::abs(integrate(4) - ref);
  const double e2 = std::abs(integrate(8) - ref);
  ASSERT_GT(e1, 0.0);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.5);
}

TEST(DriveTrainStep, StallIsReported) {
  const TurbineParams p;
  const CoeffSurface zero = ConstantSurface(0.0, CoeffKind::kPower);
  EXPECT_THROW(DriveTrainStep({1.0}, p.torque_g_max, 0.0, 10.0, 1.0, zero, p),
               StallError);
  EXPECT_THROW(DriveTrainStep({1.0}, 0.0, 0.0, 10.0, 0.0, zero, p),
               std::invalid_argument);
}

TEST(KineticEnergy, ForwardInverseAndErrors) {
  EXPECT_DOUBLE_EQ(KineticEnergy(3.0, 2.0), 9.0);
  for (double w : {0.0, 1e-3, 70.16, 122.9096, 135.0}) {
    EXPECT_NEAR(OmegaFromEnergy(KineticEnergy(w, 4653.4), 4653.4), w,
                1e-12 * std::max(1.0, w));
  }
  const TurbineParams p;
  EXPECT_DOUBLE_EQ(KineticEnergy(p.omega_g_rated, p.EquivalentInertia()),
                   0.5 * p.EquivalentInertia() * 122.9096 * 122.9096);
  EXPECT_THROW(KineticEnergy(-1.0, 1.0), std::domain_error);
  EXPECT_THROW(OmegaFromEnergy(-1.0, 1.0), std::domain_error);
}

}  // namespace
}  // namespace wt_empc
