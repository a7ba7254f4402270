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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "tests/test_util.h"
#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"
#include "wt_empc/pwl_envelope.h"
#include "wt_empc/tower_modal.h"

namespace wt_empc {
namespace {

using testing::DefaultCp;
using testing::DefaultCt;

const PwlEnvelope& DefaultAvailablePower() {
  static const PwlEnvelope* env = new PwlEnvelope(BuildPwlAvailablePower(
      DefaultCp(), TurbineParams(), DefaultPwlGrid(TurbineParams())));
  return *env;
}

const PwlEnvelope& DefaultMaxThrust() {
  static const PwlEnvelope* env = new PwlEnvelope(BuildPwlMaxThrust(
      DefaultCt(), TurbineParams(), DefaultPwlGrid(TurbineParams())));
  return *env;
}

// Integrates dx/dt = A x + B u + c with classical RK4.
Eigen::VectorXd Rk4(const LtiModel& m, Eigen::VectorXd x,
                    const Eigen::VectorXd& u, double t, int steps) {
  const double h = t / steps;
  auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return m.a * s + m.b * u + m.c;
  };
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

ThrustLinearization FitAt(double wind) {
  const TurbineParams p;
  const double j = p.EquivalentInertia();
  ThrustFitWindow w;
  w.k_lo = KineticEnergy(p.omega_g_min, j);
  w.k_hi = KineticEnergy(p.omega_g_rated, j);
  w.pr_lo = 0.2e6;
  w.pr_hi = 5.5e6;
  return FitThrustLinearization(wind, DefaultCt(), DefaultCp(), p, w);
}

TEST(ConcaveUnderestimator, AffineTargetIsReproduced) {
  std::vector<double> k, f;
  for (int i = 0; i < 50; ++i) {
    k.push_back(1.0 + i);
    f.push_back(3.0 - 0.25 * k.back());
  }
  const auto cuts = FitConcaveUnderestimator(k, f, 5);
  ASSERT_EQ(cuts.size(), 1u);
  EXPECT_NEAR(cuts[0].slope, -0.25, 1e-14);
  for (std::size_t i = 0; i < k.size(); ++i) {
    EXPECT_NEAR(MinOfCuts(cuts, k[i]), f[i], 1e-11);
    EXPECT_LE(MinOfCuts(cuts, k[i]), f[i]);
  }
}

TEST(ConcaveUnderestimator, SingleChordAndNonConcaveSamples) {
  std::vector<double> k, f;
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    k.push_back(x);
    f.push_back(std::sin(3.0 * x) + 0.2 * std::cos(25.0 * x));
  }
  const auto one = FitConcaveUnderestimator(k, f, 1);
  ASSERT_EQ(one.size(), 1u);
  const auto five = FitConcaveUnderestimator(k, f, 5);
  EXPECT_LE(five.size(), 5u);
  double gap1 = 0.0, gap5 = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    EXPECT_LE(MinOfCuts(one, k[i]), f[i]);
    EXPECT_LE(MinOfCuts(five, k[i]), f[i]);
    gap1 = std::max(gap1, f[i] - MinOfCuts(one, k[i]));
    gap5 = std::max(gap5, f[i] - MinOfCuts(five, k[i]));
  }
  EXPECT_LE(gap5, gap1);
}

TEST(PwlAvailablePower, UnderestimatesOnTheFullGrid) {
  const TurbineParams p;
  const PwlGridSpec grid = DefaultPwlGrid(p);
  ASSERT_EQ(grid.wind_grid.size(), 23u);
  ASSERT_EQ(grid.k_grid.size(), 200u);
  const auto t0 = std::chrono::steady_clock::now();
  const PwlEnvelope env = BuildPwlAvailablePower(DefaultCp(), p, grid);
  double worst_rel_gap = 0.0;
  for (double v : grid.wind_grid) {
    for (double k : grid.k_grid) {
      const double exact = AvailablePower(v, k, DefaultCp(), p).value;
      const double approx = env.Eval(v, k);
      EXPECT_LE(approx, exact) << "v " << v << " K " << k;
      worst_rel_gap =
          std::max(worst_rel_gap, (exact - approx) / p.power_g_rated);
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  EXPECT_LT(seconds, 5.0);
  EXPECT_GT(worst_rel_gap, 0.0);
  EXPECT_TRUE(std::isfinite(worst_rel_gap));
}

TEST(PwlAvailablePower, WindBlendAndContinuity) {
  const PwlEnvelope& env = DefaultAvailablePower();
  const double k = 3.0e7;
  EXPECT_EQ(env.Eval(10.0, k), env.EvalAtGrid(7, k));
  EXPECT_NEAR(env.Eval(10.5, k),
              0.5 * (env.EvalAtGrid(7, k) + env.EvalAtGrid(8, k)),
              1e-9 * env.Eval(10.5, k));
  EXPECT_EQ(env.Eval(1.0, k), env.EvalAtGrid(0, k));
  EXPECT_EQ(env.Eval(40.0, k), env.EvalAtGrid(22, k));
  // Where two cuts meet, the envelope is continuous.
  const auto& cuts = env.cuts(7);
  if (cuts.size() >= 2) {
    const double kx = (cuts[1].intercept - cuts[0].intercept) /
                      (cuts[0].slope - cuts[1].slope);
    EXPECT_NEAR(env.EvalAtGrid(7, kx - 1.0), env.EvalAtGrid(7, kx + 1.0),
                1e-6 * env.EvalAtGrid(7, kx));
  }
  // Combined cuts reproduce the blended value.
  for (double v : {6.0, 6.3, 12.75}) {
    EXPECT_NEAR(MinOfCuts(env.CombinedCuts(v), k), env.Eval(v, k),
                1e-9 * env.Eval(v, k));
  }
}

TEST(PwlAvailablePower, MidpointConcaveInEnergy) {
  const PwlEnvelope& env = DefaultAvailablePower();
  const TurbineParams p;
  const PwlGridSpec grid = DefaultPwlGrid(p);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> kd(grid.k_grid.front(),
                                            grid.k_grid.back());
  std::uniform_real_distribution<double> vd(3.0, 25.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = vd(rng), k1 = kd(rng), k2 = kd(rng);
    const double mid = env.Eval(v, 0.5 * (k1 + k2));
    EXPECT_GE(mid,
              0.5 * (env.Eval(v, k1) + env.Eval(v, k2)) - 1e-9 * std::abs(mid));
  }
}

TEST(PwlAvailablePower, CsvRoundTrip) {
  const PwlEnvelope& env = DefaultAvailablePower();
  std::stringstream buf;
  WritePwlCsv(buf, env);
  const PwlEnvelope back = ReadPwlCsv(buf, 3);
  ASSERT_EQ(back.wind_grid(), env.wind_grid());
  for (std::size_t j = 0; j < env.wind_grid().size(); ++j) {
    ASSERT_EQ(back.cuts(j).size(), env.cuts(j).size());
    for (std::size_t i = 0; i < env.cuts(j).size(); ++i) {
      EXPECT_EQ(back.cuts(j)[i].slope, env.cuts(j)[i].slope);
      EXPECT_EQ(back.cuts(j)[i].intercept, env.cuts(j)[i].intercept);
    }
  }
  std::stringstream bad("v_w,i,a_i,b_i\n3,2,1,1\n");
  EXPECT_THROW(ReadPwlCsv(bad, 3), ParseError);
}

TEST(PwlMaxThrust, UnderestimatesOnTheFullGrid) {
  const TurbineParams p;
  const PwlGridSpec grid = DefaultPwlGrid(p);
  const PwlEnvelope& env = DefaultMaxThrust();
  for (double v : grid.wind_grid) {
    for (double k : grid.k_grid) {
      EXPECT_LE(env.Eval(v, k), MaxThrust(v, k, DefaultCt(), p).value);
    }
  }
}

TEST(TorqueLimitCuts, ConservativeEverywhere) {
  const TurbineParams p;
  const double j = p.EquivalentInertia();
  const double lo = KineticEnergy(p.omega_g_min, j);
  const double hi = KineticEnergy(p.omega_g_max, j);
  const auto cuts = TorqueLimitCuts(p, lo, hi, 8);
  double worst = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double k = lo + (hi - lo) * i / 10000.0;
    const double exact =
        p.generator_efficiency * p.torque_g_max * OmegaFromEnergy(k, j);
    EXPECT_LE(MinOfCuts(cuts, k), exact);
    worst = std::max(worst, (exact - MinOfCuts(cuts, k)) / exact);
  }
  EXPECT_LT(worst, 5e-3);
}

TEST(ThrustFit, AffineAndConstantTargets) {
  std::vector<ThrustSample> affine, flat;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double pr = 1e6 * i, k = 2e7 + 3e6 * j;
      affine.push_back({pr, k, 0.08 * pr - 0.002 * k + 4e5});
      flat.push_back({pr, k, 7.5e5});
    }
  }
  const ThrustLinearization a = FitAffineThrust(affine, std::nullopt);
  EXPECT_NEAR(a.zeta1, 0.08, 1e-12);
  EXPECT_NEAR(a.zeta2, -0.002, 1e-12);
  EXPECT_NEAR(a.zeta3, 4e5, 1e-5);
  EXPECT_LE(a.fit_residual, 1e-9 * 1e6);
  const ThrustLinearization f = FitAffineThrust(flat, std::nullopt);
  EXPECT_NEAR(f.zeta1, 0.0, 1e-15);
  EXPECT_NEAR(f.zeta2, 0.0, 1e-15);
  EXPECT_NEAR(f.zeta3, 7.5e5, 1e-6);
  std::vector<ThrustSample> line = {
      {1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}, {3.0, 3.0, 3.0}};
  EXPECT_THROW(FitAffineThrust(line, std::nullopt), ConstructionError);
}

TEST(ThrustFit, AnchorPassesThroughOperatingPoint) {
  std::vector<ThrustSample> s = {{0, 1, 1}, {1, 1, 3}, {0, 2, 2}, {1, 2, 7}};
  const ThrustSample anchor{1, 2, 7};
  const ThrustLinearization lin = FitAffineThrust(s, anchor);
  EXPECT_NEAR(lin(1, 2), 7.0, 1e-12);
}

TEST(ThrustFit, ResidualShrinksWithTheWindow) {
  const TurbineParams p;
  const double j = p.EquivalentInertia();
  const double k0 = KineticEnergy(110.0, j);
  double previous = std::numeric_limits<double>::infinity();
  for (double half : {0.3, 0.15, 0.05}) {
    ThrustFitWindow w;
    w.k_lo = k0 * (1.0 - half);
    w.k_hi = k0 * (1.0 + half);
    w.pr_lo = 2e6 * (1.0 - half);
    w.pr_hi = 2e6 * (1.0 + half);
    const ThrustLinearization lin =
        FitThrustLinearization(9.0, DefaultCt(), DefaultCp(), p, w);
    EXPECT_LE(lin.fit_residual, previous * (1.0 + 1e-9));
    previous = lin.fit_residual;
  }
}

TEST(AssembleLti, StructureOfEnergyAndTowerRows) {
  const TurbineParams p;
  const ModalSystem sys = BuildModalSystem(TowerParams());
  const ThrustLinearization lin = FitAt(10.0);
  const LtiModel m = AssembleLti(sys, lin, p);
  ASSERT_EQ(m.num_states(), 5);
  EXPECT_EQ(m.a.row(0).norm(), 0.0);
  EXPECT_EQ(m.b(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.b(0, 1), -1.0 / p.generator_efficiency);
  EXPECT_DOUBLE_EQ(m.c(3), sys.input(0) * lin.zeta3);

  const LtiModel decoupled = AssembleLti(sys, ThrustLinearization{}, p);
  EXPECT_EQ(decoupled.a.block(1, 0, 4, 1).norm(), 0.0);
  EXPECT_EQ(decoupled.b.bottomRows(4).norm(), 0.0);
  EXPECT_EQ(decoupled.c.norm(), 0.0);

  // Tower block eigenvalues: -zeta w +- j w sqrt(1 - zeta^2).
  const Eigen::VectorXcd eig =
      Eigen::EigenSolver<Eigen::MatrixXd>(m.a.bottomRightCorner(4, 4))
          .eigenvalues();
  for (int i = 0; i < 2; ++i) {
    const double w = 2.0 * std::numbers::pi * sys.frequencies[i];
    const std::complex<double> expected(-0.01 * w,
                                        w * std::sqrt(1.0 - 0.01 * 0.01));
    double best = 1e9;
    for (int e = 0; e < 4; ++e)
      best = std::min(best, std::abs(eig(e) - expected));
    EXPECT_LT(best, 1e-9 * w);
  }
}

TEST(Discretize, TrivialCases) {
  LtiModel zero{Eigen::MatrixXd::Zero(2, 2),
                (Eigen::MatrixXd(2, 2) << 1, 2, 3, 4).finished(),
                Eigen::Vector2d(0.5, -1.0)};
  const DiscreteModel d = Discretize(zero, 0.2);
  EXPECT_TRUE(d.a.isIdentity(1e-15));
  EXPECT_TRUE(d.b.isApprox(0.2 * zero.b, 1e-14));
  EXPECT_TRUE(d.c.isApprox(0.2 * zero.c, 1e-14));
  LtiModel scalar{Eigen::MatrixXd::Constant(1, 1, -0.7),
                  Eigen::MatrixXd::Constant(1, 1, 1.0),
                  Eigen::VectorXd::Zero(1)};
  const DiscreteModel s = Discretize(scalar, 0.2);
  EXPECT_NEAR(s.a(0, 0), std::exp(-0.14), 1e-15);
  EXPECT_NEAR(s.b(0, 0), (1.0 - std::exp(-0.14)) / 0.7, 1e-15);
  EXPECT_THROW(Discretize(scalar, 0.0), std::invalid_argument);
}

TEST(Discretize, SemigroupAndRk4Agreement) {
  const TurbineParams p;
  const ModalSystem sys = BuildModalSystem(TowerParams());
  const LtiModel m = AssembleLti(sys, FitAt(12.0), p);
  const DiscreteModel full = Discretize(m, 0.2);
  const DiscreteModel half = Discretize(m, 0.1);
  const Eigen::MatrixXd a2 = half.a * half.a;
  EXPECT_LT((a2 - full.a).lpNorm<Eigen::Infinity>(), 1e-10);

  const Eigen::VectorXd x0 =
      (Eigen::VectorXd(5) << 3.4e7, 0.3, -0.01, 0.05, 0.02).finished();
  const Eigen::Vector2d u(4.0e6, 3.6e6);
  const Eigen::VectorXd zoh = full.a * x0 + full.b * u + full.c;
  const Eigen::VectorXd rk4 = Rk4(m, x0, u, 0.2, 1000);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(zoh(i), rk4(i), 1e-8 * std::max(std::abs(rk4(i)), 1.0))
        << "state " << i;
  }
}

TEST(Constraints, RestIsFeasibleAndSlackAbsorbsOverspeed) {
  const TurbineParams p;
  const ThrustLinearization lin = FitAt(8.0);
  const ConvexConstraintSet set =
      BuildConstraints(p, DefaultAvailablePower(), DefaultMaxThrust(), lin, 5,
                       {8.0, 8.0, 8.0}, ConstraintOptions{});
  const StageLayout& l = set.layout;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(l.size());
  z(l.energy()) = 0.5 * (set.k_min + set.k_rated);
  z(l.next_energy()) = z(l.energy());
  z(l.epigraph()) = 0.0;
  // P_r = 0 leaves F_T model = zeta2 K + zeta3, which must sit in the
  // envelope for the rest point to be feasible.
  const double fhat = lin(0.0, z(l.energy()));
  if (fhat >= 0.0) {
    EXPECT_LE(set.MaxViolation(0, z), 1e-9);
  }
  z(l.next_energy()) = set.k_rated * 1.05;
  z(l.slack()) = set.k_rated * 0.05;
  double overspeed = 0.0;
  for (const auto& row : set.stages[0]) {
    if (std::string(row.tag) != "overspeed") continue;
    double v = 0.0;
    for (const auto& [idx, c] : row.coeffs) v += c * z(idx);
    overspeed = v - row.upper;
  }
  EXPECT_NEAR(overspeed, 0.0, 1e-6);
  EXPECT_THROW(BuildConstraints(p, DefaultAvailablePower(), DefaultMaxThrust(),
                                lin, 5, {}, ConstraintOptions{}),
               std::invalid_argument);
}

// The envelope is certified on the energy grid only. Between nodes the
// exact envelope can be locally convex, so a small overshoot is allowed.
TEST(Constraints, CutFeasibleRotorPowerIsAvailable) {
  const TurbineParams p;
  const PwlEnvelope& env = DefaultAvailablePower();
  std::mt19937 rng(5);
  const PwlGridSpec grid = DefaultPwlGrid(p);
  std::uniform_real_distribution<double> kd(grid.k_grid.front(),
                                            grid.k_grid.back());
  std::uniform_int_distribution<int> vd(3, 25);
  std::uniform_int_distribution<int> kn(0, 199);
  double worst = 0.0;
  for (int i = 0; i < 3000; ++i) {
    const double v = vd(rng);
    const double on = grid.k_grid[kn(rng)];
    EXPECT_LE(MinOfCuts(env.CombinedCuts(v), on),
              AvailablePower(v, on, DefaultCp(), p).value);
    const double off = kd(rng);
    worst = std::max(worst, MinOfCuts(env.CombinedCuts(v), off) -
                                AvailablePower(v, off, DefaultCp(), p).value);
  }
  EXPECT_LT(worst, 1e-3 * p.power_g_rated);
}

}  // namespace
}  // namespace wt_empc
