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

#include "wt_empc/simulation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wt_empc/config.h"
#include "wt_empc/errors.h"
#include "wt_empc/experiments.h"
#include "wt_empc/export.h"
#include "wt_empc/tower_modal.h"

namespace wt_empc {
namespace {

const SimulationSetup& DefaultSetup() {
  static const SimulationSetup* setup =
      new SimulationSetup(MakeSetup(ScenarioConfig{}));
  return *setup;
}

TEST(WindProfile, StaircasePlateauCountAndDwell) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> speed(3.0, 20.0), step(0.3, 3.0),
      dwell(5.0, 200.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = speed(rng);
    const double b = a + speed(rng) - 3.0;
    const double s = step(rng), d = dwell(rng);
    const WindProfile w = WindProfile::Staircase(a, b, s, d);
    const auto expected =
        static_cast<std::size_t>(std::ceil((b - a) / s - 1e-9)) + 1;
    ASSERT_EQ(w.plateaus().size(), expected) << a << " " << b << " " << s;
    for (std::size_t k = 0; k < expected; ++k) {
      const WindPlateau& p = w.plateaus()[k];
      EXPECT_NEAR(p.end - p.start, d, 1e-9);
      EXPECT_LE(p.speed, b + 1e-12);
      if (k > 0) EXPECT_GT(p.speed, w.plateaus()[k - 1].speed);
    }
    EXPECT_DOUBLE_EQ(w.plateaus().back().speed, b);
    EXPECT_NEAR(w.duration(), expected * d, 1e-9);
  }
}

TEST(WindProfile, DefaultStaircase) {
  const WindProfile w = WindProfile::Staircase(6.0, 17.0, 1.0, 100.0);
  ASSERT_EQ(w.plateaus().size(), 12u);
  EXPECT_EQ(w.At(0.0), 6.0);
  EXPECT_EQ(w.At(99.9), 6.0);
  EXPECT_EQ(w.At(100.0), 7.0);
  EXPECT_EQ(w.At(1199.9), 17.0);
  EXPECT_EQ(w.MinSpeed(), 6.0);
  EXPECT_EQ(w.duration(), 1200.0);
}

TEST(WindProfile, RejectsBadParameters) {
  EXPECT_THROW(WindProfile::Staircase(0.0, 10.0, 1.0, 10.0),
               std::invalid_argument);
  EXPECT_THROW(WindProfile::Staircase(6.0, 5.0, 1.0, 10.0),
               std::invalid_argument);
  EXPECT_THROW(WindProfile::Staircase(6.0, 10.0, 1.0, 0.0),
               std::invalid_argument);
  EXPECT_THROW(WindProfile::Constant(-1.0, 10.0), std::invalid_argument);
  EXPECT_THROW(WindProfile::Constant(8.0, 0.0), std::invalid_argument);
}

TEST(WindProfile, ParsesCsv) {
  std::istringstream in("time,speed\n0,8\n20,9.5\n50,9.5\n");
  const WindProfile w = WindProfile::FromCsv(in);
  EXPECT_EQ(w.kind(), WindProfile::Kind::kFile);
  ASSERT_EQ(w.plateaus().size(), 2u);
  EXPECT_EQ(w.At(19.9), 8.0);
  EXPECT_EQ(w.At(20.0), 9.5);
  EXPECT_EQ(w.duration(), 50.0);
}

TEST(WindProfile, RejectsMalformedCsv) {
  for (const char* text : {"0,8\n", "0,8\n5,x\n10,9\n", "0,8\n5,-1\n",
                           "0,8\n5,9\n5,10\n", "1,8\n5,9\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(WindProfile::FromCsv(in), ParseError) << text;
  }
}

TEST(Plant, EquilibriumHasNoModalAcceleration) {
  const SimulationSetup& s = DefaultSetup();
  const Plant plant(s.turbine, BuildModalSystem(s.tower), s.tables);
  const PlantState eq = plant.Equilibrium(100.0, 3.0e5);
  const Eigen::VectorXd acc = ModalAcceleration(plant.tower(), eq.tower, 3.0e5);
  EXPECT_LE(acc.lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Plant, OverloadedGeneratorStalls) {
  const SimulationSetup& s = DefaultSetup();
  Plant plant(s.turbine, BuildModalSystem(s.tower), s.tables);
  plant.Reset({5.0, ModalState::Zero(plant.tower().num_modes())});
  EXPECT_THROW(
      {
        for (int k = 0; k < 100; ++k) {
          plant.Advance(10.0 * s.turbine.torque_g_max, s.turbine.beta_max, 4.0,
                        0.2);
        }
      },
      StallError);
}

TEST(RunSimulation, RefusesWindBelowCutIn) {
  EXPECT_THROW(RunSimulation(DefaultSetup(), WindProfile::Constant(2.5, 10.0)),
               std::invalid_argument);
  SimulationOptions opts;
  opts.cut_in = 7.0;
  EXPECT_THROW(RunSimulation(DefaultSetup(),
                             WindProfile::Staircase(6.0, 8.0, 1.0, 10.0), opts),
               std::invalid_argument);
}

TEST(RunSimulation, ConstantWindFromSteadyStateStaysPut) {
  const SimLog log =
      RunSimulation(DefaultSetup(), WindProfile::Constant(10.0, 30.0));
  ASSERT_TRUE(log.completed) << log.diagnostic;
  ASSERT_EQ(log.records.size(), 150u);
  double pg_lo = 1e300, pg_hi = -1e300, om_lo = 1e300, om_hi = -1e300;
  double v_max = 0.0;
  for (const SimRecord& r : log.records) {
    if (r.t < 10.0) continue;
    pg_lo = std::min(pg_lo, r.gen_power);
    pg_hi = std::max(pg_hi, r.gen_power);
    om_lo = std::min(om_lo, r.omega_g);
    om_hi = std::max(om_hi, r.omega_g);
    v_max = std::max(v_max, r.v_p.lpNorm<Eigen::Infinity>());
    EXPECT_EQ(r.mode, "nominal");
  }
  EXPECT_LE(pg_hi - pg_lo, 1.0);   // W
  EXPECT_LE(om_hi - om_lo, 1e-6);  // rad/s
  EXPECT_LE(v_max, 1e-6);          // m/s
}

TEST(RunSimulation, LogIsOnAUniformGrid) {
  const SimLog log =
      RunSimulation(DefaultSetup(), WindProfile::Staircase(8.0, 9.0, 1.0, 4.0));
  ASSERT_TRUE(log.completed);
  ASSERT_EQ(log.records.size(), 40u);
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    EXPECT_NEAR(log.records[k].t, 0.2 * k, 1e-12);
    EXPECT_EQ(log.records[k].x_p.size(), 3);
    EXPECT_EQ(log.records[k].tfam_rate.size(), 3);
  }
}

// Trapezoidal integral of P_r - P_g / eta over the logged samples against
// the plant's change in K across a wind step.
TEST(RunSimulation, EnergyBookkeeping) {
  const SimLog log = RunSimulation(
      DefaultSetup(), WindProfile::Staircase(9.0, 10.0, 1.0, 15.0));
  ASSERT_TRUE(log.completed);
  const double eta = DefaultSetup().turbine.generator_efficiency;
  const double ts = log.sample_time;
  double integral = 0.0, throughput = 0.0;
  for (std::size_t k = 1; k < log.records.size(); ++k) {
    const SimRecord& a = log.records[k - 1];
    const SimRecord& b = log.records[k];
    integral +=
        0.5 * ts *
        (a.rotor_power - a.gen_power / eta + b.rotor_power - b.gen_power / eta);
    throughput += 0.5 * ts * (a.gen_power + b.gen_power) / eta;
  }
  const double dk = log.records.back().energy - log.records.front().energy;
  const Metrics m = ComputeMetrics(log);
  EXPECT_NEAR(m.energy_balance_error, std::abs(dk - integral),
              1e-6 * throughput);
  EXPECT_NEAR(m.energy_throughput, throughput, 1e-9 * throughput);
  // The wind step moves K by megajoules; the sampled balance tracks it.
  EXPECT_GT(std::abs(dk), 1e6);
  EXPECT_LE(std::abs(dk - integral), 1e-3 * throughput);
}

TEST(RunSimulation, IsDeterministic) {
  const WindProfile wind = WindProfile::Staircase(11.0, 12.0, 1.0, 5.0);
  std::string csv[2];
  for (auto& text : csv) {
    SimLog log = RunSimulation(DefaultSetup(), wind);
    // Wall-clock solve time is the one non-reproducible column.
    for (SimRecord& r : log.records) r.solve_time = 0.0;
    std::ostringstream out;
    WriteTimeseriesCsv(out, log);
    text = out.str();
  }
  EXPECT_EQ(csv[0], csv[1]);
}

TEST(RunSimulation, OnStepCanStopEarly) {
  SimulationOptions opts;
  int calls = 0;
  opts.on_step = [&](const SimRecord&) { return ++calls < 3; };
  const SimLog log =
      RunSimulation(DefaultSetup(), WindProfile::Constant(8.0, 10.0), opts);
  EXPECT_EQ(log.records.size(), 3u);
  EXPECT_FALSE(log.completed);
}

// Two plateaus of a synthetic log: settled means over the last half,
// transient RMS over the first window.
TEST(ComputeMetrics, WindowsFollowTheDefinition) {
  SimLog log;
  log.sample_time = 1.0;
  log.locations = {1.0};
  log.num_modes = 1;
  log.plateaus = {{5.0, 0.0, 10.0}, {6.0, 10.0, 20.0}};
  for (int k = 0; k < 20; ++k) {
    SimRecord r;
    r.t = k;
    r.gen_power = k;
    r.omega_g = 2.0 * k;
    r.v_p = Eigen::VectorXd::Constant(1, k % 10 < 3 ? 2.0 : 0.0);
    r.x_p = r.v_p;
    r.tfam_rate = r.v_p;
    r.mode = "nominal";
    r.tail_distance = 1.0;
    log.records.push_back(r);
  }
  MetricWindows w;
  w.settled_fraction = 0.5;
  w.transient = 4.0;
  const Metrics m = ComputeMetrics(log, w);
  ASSERT_EQ(m.plateaus.size(), 2u);
  EXPECT_DOUBLE_EQ(m.plateaus[0].steady_gen_power, (5 + 6 + 7 + 8 + 9) / 5.0);
  EXPECT_DOUBLE_EQ(m.plateaus[1].steady_gen_power,
                   (15 + 16 + 17 + 18 + 19) / 5.0);
  EXPECT_DOUBLE_EQ(m.plateaus[1].steady_omega_g, 34.0);
  // First 4 s: three samples at 2, one at 0.
  EXPECT_DOUBLE_EQ(m.plateaus[0].rms_velocity(0), std::sqrt(12.0 / 4.0));
  EXPECT_DOUBLE_EQ(m.plateaus[1].peak_velocity(0), 2.0);
  EXPECT_DOUBLE_EQ(m.plateaus[1].mean_tail_distance, 1.0);
  EXPECT_DOUBLE_EQ(m.energy_captured, 190.0);
  // Pooled over plateaus 2..n only.
  EXPECT_DOUBLE_EQ(PooledTransientRms(log, w)(0), std::sqrt(12.0 / 4.0));
}

TEST(ComputeMetrics, SkipsIncompletePlateaus) {
  SimLog log;
  log.sample_time = 1.0;
  log.locations = {1.0};
  log.plateaus = {{5.0, 0.0, 10.0}, {6.0, 10.0, 20.0}};
  for (int k = 0; k < 14; ++k) {
    SimRecord r;
    r.t = k;
    r.v_p = r.x_p = r.tfam_rate = Eigen::VectorXd::Zero(1);
    log.records.push_back(r);
  }
  EXPECT_EQ(ComputeMetrics(log).plateaus.size(), 1u);
}

TEST(Experiments, IdenticalRunsCompareToZero) {
  const SimulationSetup& s = DefaultSetup();
  const WindProfile wind = WindProfile::Staircase(7.0, 8.0, 1.0, 6.0);
  const std::vector<RunSpec> specs = {{"a", s, wind, {}}, {"b", s, wind, {}}};
  MetricWindows w;
  w.transient = 3.0;
  const std::vector<RunResult> runs = RunBatch(specs, w, 2);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].label, "a");
  const Comparison c = CompareRuns(runs[1], runs[0], w);
  ASSERT_EQ(c.plateaus.size(), 2u);
  for (const PlateauComparison& p : c.plateaus) {
    EXPECT_EQ(p.gen_power_delta, 0.0);
  }
  EXPECT_EQ(c.plateaus[1].rms_ratio(0), 1.0);
  EXPECT_EQ(c.pooled_reduction(0), 0.0);
}

TEST(Experiments, ThreadCapComesFromTheEnvironment) {
  setenv("WT_EMPC_THREADS", "3", 1);
  EXPECT_EQ(MaxParallelRuns(), 3);
  setenv("WT_EMPC_THREADS", "zero", 1);
  EXPECT_GE(MaxParallelRuns(), 1);
  unsetenv("WT_EMPC_THREADS");
  EXPECT_GE(MaxParallelRuns(), 1);
}

TEST(Experiments, SingleStepHorizonRunCompletes) {
  SimulationSetup s = DefaultSetup();
  s.controller.horizon = 1;
  const SimLog log =
      RunSimulation(s, WindProfile::Staircase(8.0, 9.0, 1.0, 3.0));
  EXPECT_TRUE(log.completed) << log.diagnostic;
}

}  // namespace
}  // namespace wt_empc
