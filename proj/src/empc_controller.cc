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

#include "wt_empc/empc_controller.h"

#include <spdlog/spdlog.h>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"

namespace wt_empc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Triplets = std::vector<Eigen::Triplet<double>>;

// Optimisation-unit factor of each stage-layout slot.
double StageScale(const StageLayout& l, int local) {
  return local >= 1 && local < l.num_states ? 1.0 : kEnergyUnit;
}

// Accumulates rows of a QP. Single-variable rows become variable bounds.
class RowCollector {
 public:
  explicit RowCollector(int num_vars)
      : n_(num_vars),
        var_lower_(Eigen::VectorXd::Constant(num_vars, -kInf)),
        var_upper_(Eigen::VectorXd::Constant(num_vars, kInf)) {}

  void AddRow(const std::map<int, double>& coeffs, double lower, double upper) {
    std::vector<std::pair<int, double>> nz;
    double norm = 0.0;
    for (const auto& [j, c] : coeffs) {
      if (c == 0.0) continue;
      nz.emplace_back(j, c);
      norm = std::max(norm, std::abs(c));
    }
    if (nz.empty()) {
      if (lower > 1e-12 || upper < -1e-12) {
        throw std::invalid_argument("constant row is violated");
      }
      return;
    }
    if (nz.size() == 1) {
      const auto [j, c] = nz[0];
      double lo = lower / c, hi = upper / c;
      if (c < 0.0) std::swap(lo, hi);
      var_lower_(j) = std::max(var_lower_(j), lo);
      var_upper_(j) = std::min(var_upper_(j), hi);
      return;
    }
    const int r = static_cast<int>(lower_.size());
    for (const auto& [j, c] : nz) ineq_.emplace_back(r, j, c / norm);
    lower_.push_back(lower / norm);
    upper_.push_back(upper / norm);
  }

  void AddEquality(const std::map<int, double>& coeffs, double rhs) {
    const int r = static_cast<int>(eq_rhs_.size());
    for (const auto& [j, c] : coeffs) {
      if (c != 0.0) eq_.emplace_back(r, j, c);
    }
    eq_rhs_.push_back(rhs);
  }

  void Fix(int j, double value) {
    var_lower_(j) = value;
    var_upper_(j) = value;
  }

  void Finish(QuadraticProgram* qp) {
    qp->eq_matrix.resize(static_cast<int>(eq_rhs_.size()), n_);
    qp->eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
    qp->eq_rhs = Eigen::Map<Eigen::VectorXd>(eq_rhs_.data(), eq_rhs_.size());
    qp->ineq_matrix.resize(static_cast<int>(lower_.size()), n_);
    qp->ineq_matrix.setFromTriplets(ineq_.begin(), ineq_.end());
    qp->ineq_lower = Eigen::Map<Eigen::VectorXd>(lower_.data(), lower_.size());
    qp->ineq_upper = Eigen::Map<Eigen::VectorXd>(upper_.data(), upper_.size());
    // Crossed bounds from rounding in the conversions above.
    for (int j = 0; j < n_; ++j) {
      if (var_lower_(j) > var_upper_(j) &&
          var_lower_(j) - var_upper_(j) <=
              1e-12 * std::max(1.0, std::abs(var_upper_(j)))) {
        var_lower_(j) = var_upper_(j);
      }
    }
    qp->var_lower = var_lower_;
    qp->var_upper = var_upper_;
  }

 private:
  int n_;
  Triplets eq_, ineq_;
  std::vector<double> eq_rhs_, lower_, upper_;
  Eigen::VectorXd var_lower_, var_upper_;
};

// Adds one stage of convex constraints, with `map` taking stage-layout
// slots to QP columns.
template <typename Map>
void AddStageRows(const ConvexConstraintSet& set, int q, const Map& map,
                  RowCollector* rows) {
  const StageLayout& l = set.layout;
  for (const LinearRow& row : set.stages[q]) {
    std::map<int, double> coeffs;
    for (const auto& [local, c] : row.coeffs) {
      coeffs[map(local)] += c * StageScale(l, local);
    }
    rows->AddRow(coeffs, row.lower, row.upper);
  }
}

void AddSymmetric(Triplets* h, int i, int j, double v) {
  h->emplace_back(i, j, v);
  if (i != j) h->emplace_back(j, i, v);
}

}  // namespace

std::string ToString(ControllerVariant variant) {
  switch (variant) {
    case ControllerVariant::kNoDamping:
      return "no-damping";
    case ControllerVariant::kSingleMode:
      return "single-mode";
    case ControllerVariant::kMultiMode:
      return "multi-mode";
  }
  return "unknown";
}

ControllerVariant ParseVariant(const std::string& name) {
  for (auto v : {ControllerVariant::kNoDamping, ControllerVariant::kSingleMode,
                 ControllerVariant::kMultiMode}) {
    if (ToString(v) == name) return v;
  }
  throw std::invalid_argument("unknown controller variant '" + name + "'");
}

std::string ToString(ControlMode mode) {
  switch (mode) {
    case ControlMode::kNominal:
      return "nominal";
    case ControlMode::kNoTerminal:
      return "no-terminal";
    case ControlMode::kHold:
      return "hold";
  }
  return "unknown";
}

void EmpcConfig::Validate(int num_locations) const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("controller config: " + what);
  };
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(sample_time > 0.0)) fail("sample time must be > 0");
  for (double a : {weights.alpha1, weights.alpha2, weights.alpha3,
                   weights.alpha4, weights.alpha5}) {
    if (!(a >= 0.0)) fail("objective weights must be >= 0");
  }
  if (static_cast<int>(location_weights.size()) != num_locations) {
    fail("need one location weight per tower location");
  }
  for (double w : location_weights) {
    if (!(w >= 0.0)) fail("location weights must be >= 0");
  }
  if (num_torque_cuts < 1) fail("need at least one torque cut");
  if (!(refit_wind_change >= 0.0) || !(steady_state_wind_change >= 0.0)) {
    fail("wind-change thresholds must be >= 0");
  }
}

AeroTables BuildAeroTables(std::shared_ptr<const CoeffSurface> cp,
                           std::shared_ptr<const CoeffSurface> ct,
                           const TurbineParams& params, int num_segments) {
  PwlGridSpec grid = DefaultPwlGrid(params);
  grid.num_segments = num_segments;
  AeroTables t;
  t.available_power = std::make_shared<const PwlEnvelope>(
      BuildPwlAvailablePower(*cp, params, grid));
  t.max_thrust =
      std::make_shared<const PwlEnvelope>(BuildPwlMaxThrust(*ct, params, grid));
  t.cp = std::move(cp);
  t.ct = std::move(ct);
  return t;
}

AeroTables DefaultAeroTables(const TurbineParams& params) {
  auto cp = std::make_shared<const CoeffSurface>(
      MakeAnalyticPowerSurface(DefaultLambdaGrid(), DefaultBetaGrid()));
  auto ct =
      std::make_shared<const CoeffSurface>(MakeMomentumThrustSurface(*cp));
  return BuildAeroTables(std::move(cp), std::move(ct), params);
}

Eigen::MatrixXd VelocityWeightMatrix(const Eigen::MatrixXd& shape_matrix,
                                     const Eigen::VectorXd& weights) {
  if (weights.size() != shape_matrix.cols()) {
    throw std::invalid_argument("one weight per location");
  }
  const Eigen::MatrixXd q =
      shape_matrix * weights.asDiagonal() * shape_matrix.transpose();
  return 0.5 * (q + q.transpose());
}

double VelocityObjective(const Eigen::VectorXd& modal_velocity,
                         const Eigen::MatrixXd& weight_matrix) {
  return modal_velocity.dot(weight_matrix * modal_velocity);
}

Eigen::VectorXd PredictionModel::StateScale() const {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(num_states);
  s(0) = kEnergyUnit;
  return s;
}

Eigen::VectorXd PredictionModel::ToScaled(const Eigen::VectorXd& x_si) const {
  return x_si.cwiseQuotient(StateScale());
}

Eigen::VectorXd PredictionModel::ToSi(const Eigen::VectorXd& x_scaled) const {
  return x_scaled.cwiseProduct(StateScale());
}

PredictionModel MakePredictionModel(const ModalSystem& system,
                                    const ThrustLinearization& thrust,
                                    const TurbineParams& params,
                                    double sample_time) {
  PredictionModel m;
  const DiscreteModel d =
      Discretize(AssembleLti(system, thrust, params), sample_time);
  m.num_states = static_cast<int>(d.a.rows());
  m.thrust = thrust;
  const Eigen::VectorXd s = m.StateScale();
  m.scaled.sample_time = sample_time;
  m.scaled.a = s.cwiseInverse().asDiagonal() * d.a * s.asDiagonal();
  m.scaled.b = s.cwiseInverse().asDiagonal() * d.b * kPowerUnit;
  m.scaled.c = d.c.cwiseQuotient(s);
  return m;
}

QuadraticProgram BuildSteadyStateQp(const PredictionModel& model,
                                    const ConvexConstraintSet& constraints,
                                    const ObjectiveWeights& weights,
                                    const Eigen::MatrixXd& velocity_weight) {
  const int n = model.num_states;
  const int nm = (n - 1) / 2;
  const int ipr = n, ipg = n + 1, it = n + 2, ie = n + 3;
  const StageLayout& l = constraints.layout;
  if (l.num_states != n) {
    throw std::invalid_argument("constraint layout does not match the model");
  }
  auto map = [&](int local) {
    if (local == l.next_energy()) return 0;
    if (local < n) return local;
    return n + (local - l.rotor_power());
  };
  RowCollector rows(n + 4);
  const Eigen::MatrixXd& a = model.scaled.a;
  const Eigen::MatrixXd& b = model.scaled.b;
  for (int i = 0; i < n; ++i) {
    std::map<int, double> c;
    for (int j = 0; j < n; ++j) c[j] = a(i, j) - (i == j ? 1.0 : 0.0);
    c[ipr] = b(i, 0);
    c[ipg] = b(i, 1);
    rows.AddEquality(c, -model.scaled.c(i));
  }
  AddStageRows(constraints, 0, map, &rows);
  if (!constraints.with_slack) rows.Fix(ie, 0.0);

  QuadraticProgram qp;
  qp.gradient = Eigen::VectorXd::Zero(n + 4);
  qp.gradient(ipg) = -weights.alpha1;
  qp.gradient(it) = -weights.alpha2;
  qp.gradient(ie) = weights.alpha5;
  Triplets h;
  for (int i = 0; i < nm; ++i) {
    for (int j = 0; j < nm; ++j) {
      if (velocity_weight(i, j) != 0.0) {
        h.emplace_back(1 + nm + i, 1 + nm + j, 2.0 * velocity_weight(i, j));
      }
    }
  }
  qp.hessian.resize(n + 4, n + 4);
  qp.hessian.setFromTriplets(h.begin(), h.end());
  rows.Finish(&qp);

  return qp;
}

SteadyState SolveSteadyState(const PredictionModel& model,
                             const ConvexConstraintSet& constraints,
                             const ObjectiveWeights& weights,
                             const Eigen::MatrixXd& velocity_weight,
                             const QpSettings& settings) {
  const int n = model.num_states;
  const int ipg = n + 1, ie = n + 3;
  const Eigen::MatrixXd& a = model.scaled.a;
  const Eigen::MatrixXd& b = model.scaled.b;
  const QuadraticProgram qp =
      BuildSteadyStateQp(model, constraints, weights, velocity_weight);
  QpSettings exact = settings;
  exact.polish_interior_point = true;
  const QpSolution sol = SolveQp(qp, exact);
  SteadyState ss;
  ss.status = sol.status;
  if (sol.status != QpStatus::kOptimal) return ss;

  // Project onto the exact fixed point: energy balance first, then the
  // tower states, which are unique given (K, u).
  Eigen::VectorXd xs = sol.x.head(n);
  double pg = sol.x(ipg);
  double pr = -b(0, 1) / b(0, 0) * pg;
  const Eigen::Vector2d u(pr, pg);
  if (n > 1) {
    const int nt = n - 1;
    const Eigen::MatrixXd m =
        Eigen::MatrixXd::Identity(nt, nt) - a.bottomRightCorner(nt, nt);
    const Eigen::VectorXd rhs = a.block(1, 0, nt, 1) * xs(0) +
                                b.bottomRows(nt) * u + model.scaled.c.tail(nt);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::VectorXd y = lu.solve(rhs);
    y += lu.solve(rhs - m * y);
    xs.tail(nt) = y;
  }
  ss.fixed_point_residual =
      (xs - a * xs - b * u - model.scaled.c).lpNorm<Eigen::Infinity>();
  ss.x = model.ToSi(xs);
  ss.rotor_power = pr * kPowerUnit;
  ss.gen_power = pg * kPowerUnit;
  ss.slack = sol.x(ie) * kEnergyUnit;
  return ss;
}

QuadraticProgram AssembleFhocp(const FhocpInputs& in, FhocpLayout* layout_out) {
  const PredictionModel& model = *in.model;
  const ConvexConstraintSet& set = *in.constraints;
  const int n = model.num_states;
  const int nm = (n - 1) / 2;
  const int np = static_cast<int>(set.stages.size());
  if (np < 1) throw std::invalid_argument("horizon must be >= 1");
  if (set.layout.num_states != n || in.x0.size() != n) {
    throw std::invalid_argument("state dimension mismatch");
  }
  FhocpLayout lay{n, np};
  const StageLayout& l = set.layout;
  const int nv = lay.size();
  RowCollector rows(nv);

  const Eigen::VectorXd x0 = model.ToScaled(in.x0);
  for (int i = 0; i < n; ++i) rows.Fix(lay.state(0, i), x0(i));

  const Eigen::MatrixXd& a = model.scaled.a;
  const Eigen::MatrixXd& b = model.scaled.b;
  for (int q = 0; q < np; ++q) {
    for (int i = 0; i < n; ++i) {
      std::map<int, double> c;
      c[lay.state(q + 1, i)] = 1.0;
      for (int j = 0; j < n; ++j) c[lay.state(q, j)] -= a(i, j);
      c[lay.rotor_power(q)] -= b(i, 0);
      c[lay.gen_power(q)] -= b(i, 1);
      rows.AddEquality(c, model.scaled.c(i));
    }
    auto map = [&](int local) {
      if (local == l.next_energy()) return lay.state(q + 1, 0);
      if (local == l.slack()) return lay.slack();
      if (local < n) return lay.state(q, local);
      return lay.rotor_power(q) + (local - l.rotor_power());
    };
    AddStageRows(set, q, map, &rows);
  }
  if (!set.with_slack) rows.Fix(lay.slack(), 0.0);
  if (in.terminal_state) {
    const Eigen::VectorXd xt = model.ToScaled(*in.terminal_state);
    for (int i = 0; i < n; ++i) rows.Fix(lay.state(np, i), xt(i));
  }

  QuadraticProgram qp;
  qp.gradient = Eigen::VectorXd::Zero(nv);
  const ObjectiveWeights& w = in.weights;
  const double ts = model.scaled.sample_time;
  const double r3 = w.alpha3 / (ts * ts);
  const double r4 = w.alpha4 / (ts * ts);
  Triplets h;
  // alpha (u_q - u_{q-1})^2 with u_{-1} the applied input.
  auto add_rate = [&](double r, int q, int col_q, int col_prev,
                      double prev_value) {
    if (r == 0.0) return;
    AddSymmetric(&h, col_q, col_q, 2.0 * r);
    if (q == 0) {
      qp.gradient(col_q) -= 2.0 * r * prev_value;
    } else {
      AddSymmetric(&h, col_prev, col_prev, 2.0 * r);
      AddSymmetric(&h, col_q, col_prev, -2.0 * r);
    }
  };
  for (int q = 0; q < np; ++q) {
    qp.gradient(lay.gen_power(q)) -= w.alpha1;
    qp.gradient(lay.epigraph(q)) -= w.alpha2;
    add_rate(r3, q, lay.gen_power(q), q > 0 ? lay.gen_power(q - 1) : -1,
             in.prev_gen_power / kPowerUnit);
    add_rate(r4, q, lay.rotor_power(q), q > 0 ? lay.rotor_power(q - 1) : -1,
             in.prev_rotor_power / kPowerUnit);
  }
  qp.gradient(lay.slack()) += w.alpha5;
  if (in.velocity_weight.size() > 0) {
    if (in.velocity_weight.rows() != nm || in.velocity_weight.cols() != nm) {
      throw std::invalid_argument("velocity weight must be modes x modes");
    }
    for (int q = 1; q <= np; ++q) {
      for (int i = 0; i < nm; ++i) {
        for (int j = 0; j < nm; ++j) {
          const double v = in.velocity_weight(i, j);
          if (v != 0.0) {
            h.emplace_back(lay.state(q, 1 + nm + i), lay.state(q, 1 + nm + j),
                           2.0 * v);
          }
        }
      }
    }
  }
  qp.hessian.resize(nv, nv);
  qp.hessian.setFromTriplets(h.begin(), h.end());
  rows.Finish(&qp);
  if (layout_out) *layout_out = lay;
  return qp;
}

struct EmpcController::State {
  TurbineParams turbine;
  AeroTables tables;
  ModalSystem system;
  Eigen::MatrixXd velocity_weight;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> shape_pinv;
  double condition = 0.0;

  bool have_fit = false;
  double fit_wind = 0.0;
  double ss_wind = 0.0;
  PredictionModel model;
  ConvexConstraintSet ss_constraints;
  SteadyState ss;
  int model_version = 0;

  ConvexConstraintSet horizon_constraints;
  double horizon_wind = -1.0;
  int horizon_version = -1;

  QpSolver solver;
  std::optional<Eigen::Vector2d> prev_input;  // W
  std::optional<ControlCommand> last_command;
  Eigen::VectorXd last_primal;
  std::vector<Eigen::VectorXd> predicted;
};

EmpcController::EmpcController(const TurbineParams& turbine,
                               const TowerParams& tower, AeroTables tables,
                               EmpcConfig config)
    : config_(std::move(config)), state_(std::make_unique<State>()) {
  turbine.Validate();
  tower.Validate();
  config_.Validate(static_cast<int>(tower.locations.size()));
  if (!tables.cp || !tables.ct || !tables.available_power ||
      !tables.max_thrust) {
    throw std::invalid_argument("aerodynamic tables are incomplete");
  }
  State& s = *state_;
  s.turbine = turbine;
  s.tables = std::move(tables);
  s.solver = QpSolver(config_.qp);
  const bool single = config_.variant == ControllerVariant::kSingleMode;
  s.system = BuildModalSystem(tower, single ? 1 : -1);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      config_.location_weights.data(), config_.location_weights.size());
  if (config_.variant == ControllerVariant::kNoDamping) w.setZero();
  if (single) w.tail(w.size() - 1).setZero();
  s.velocity_weight = VelocityWeightMatrix(s.system.shape_matrix, w);

  const Eigen::MatrixXd st = s.system.shape_matrix.transpose();
  if (st.rows() < st.cols()) {
    throw std::invalid_argument("need at least as many locations as modes");
  }
  s.shape_pinv.compute(st);
  const Eigen::VectorXd sv =
      Eigen::JacobiSVD<Eigen::MatrixXd>(st).singularValues();
  s.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : kInf;
  if (s.condition > 1e6) {
    spdlog::warn("mode-shape matrix is ill conditioned (cond {:.3g})",
                 s.condition);
  }
}

EmpcController::~EmpcController() = default;
EmpcController::EmpcController(EmpcController&&) noexcept = default;
EmpcController& EmpcController::operator=(EmpcController&&) noexcept = default;

const ModalSystem& EmpcController::modal_system() const {
  return state_->system;
}
const PredictionModel& EmpcController::prediction_model() const {
  return state_->model;
}
const SteadyState& EmpcController::steady_state() const { return state_->ss; }
const ConvexConstraintSet& EmpcController::stage_constraints() const {
  return state_->ss_constraints;
}
const std::vector<Eigen::VectorXd>& EmpcController::predicted_states() const {
  return state_->predicted;
}
double EmpcController::condition_number() const { return state_->condition; }

Eigen::VectorXd EmpcController::ReconstructState(
    const Measurements& meas) const {
  const State& s = *state_;
  const int nm = s.system.num_modes();
  const int nl = s.system.num_locations();
  if (meas.x_p.size() != nl || meas.v_p.size() != nl) {
    throw std::invalid_argument("one measurement per tower location");
  }
  if (!std::isfinite(meas.omega_g) || !meas.x_p.allFinite() ||
      !meas.v_p.allFinite()) {
    throw std::invalid_argument("measurements must be finite");
  }
  Eigen::VectorXd x(2 * nm + 1);
  x(0) = KineticEnergy(meas.omega_g, s.turbine.EquivalentInertia());
  x.segment(1, nm) = s.shape_pinv.solve(meas.x_p);
  x.segment(1 + nm, nm) = s.shape_pinv.solve(meas.v_p);
  return x;
}

void EmpcController::UpdateOperatingPoint(double wind) {
  if (!(wind > 0.0) || !std::isfinite(wind)) {
    throw std::invalid_argument("wind speed must be positive");
  }
  State& s = *state_;
  const TurbineParams& p = s.turbine;
  const AeroTables& t = s.tables;
  ConstraintOptions opts;
  opts.num_torque_cuts = config_.num_torque_cuts;

  auto rebuild = [&](const ThrustLinearization& lin) {
    s.model = MakePredictionModel(s.system, lin, p, config_.sample_time);
    s.ss_constraints = BuildConstraints(p, *t.available_power, *t.max_thrust,
                                        lin, s.model.num_states, {wind}, opts);
    s.ss = SolveSteadyState(s.model, s.ss_constraints, config_.weights,
                            s.velocity_weight, config_.qp);
    ++s.model_version;
  };

  if (!s.have_fit || std::abs(wind - s.fit_wind) > config_.refit_wind_change) {
    const double j = p.EquivalentInertia();
    const double k_min = KineticEnergy(p.omega_g_min, j);
    const double k_rated = KineticEnergy(p.omega_g_rated, j);
    const double k_max = KineticEnergy(p.omega_g_max, j);
    ThrustFitWindow wide;
    wide.k_lo = k_min;
    wide.k_hi = k_rated;
    double pav = 0.0;
    for (double k : {k_min, 0.5 * (k_min + k_rated), k_rated}) {
      pav = std::max(pav, AvailablePower(wind, k, *t.cp, p).value);
    }
    wide.pr_hi = std::min(1.1 * p.power_g_rated / p.generator_efficiency, pav);
    wide.pr_lo = std::min(0.02 * p.power_g_rated, 0.1 * wide.pr_hi);
    rebuild(FitThrustLinearization(wind, *t.ct, *t.cp, p, wide));
    if (s.ss.status == QpStatus::kOptimal) {
      // Local fit around the equilibrium, anchored at it.
      const double k_s = s.ss.x(0);
      const double pr_s = s.ss.rotor_power;
      ThrustFitWindow local;
      local.k_lo = std::max(k_min, 0.9 * k_s);
      local.k_hi = std::min(k_max, std::max(1.05 * k_s, local.k_lo * 1.01));
      local.pr_lo = std::max(0.0, pr_s - 0.2 * p.power_g_rated);
      local.pr_hi = pr_s + 0.2 * p.power_g_rated;
      local.anchor = std::make_pair(pr_s, k_s);
      try {
        rebuild(FitThrustLinearization(wind, *t.ct, *t.cp, p, local));
      } catch (const ConstructionError& e) {
        spdlog::debug("local thrust fit at {} m/s failed: {}", wind, e.what());
        rebuild(FitThrustLinearization(wind, *t.ct, *t.cp, p, wide));
      }
    }
    s.have_fit = true;
    s.fit_wind = wind;
    s.ss_wind = wind;
  } else if (std::abs(wind - s.ss_wind) > config_.steady_state_wind_change) {
    s.ss_constraints =
        BuildConstraints(p, *t.available_power, *t.max_thrust, s.model.thrust,
                         s.model.num_states, {wind}, opts);
    s.ss = SolveSteadyState(s.model, s.ss_constraints, config_.weights,
                            s.velocity_weight, config_.qp);
    s.ss_wind = wind;
  }
  if (s.ss.status != QpStatus::kOptimal) {
    spdlog::debug("no steady state at {} m/s ({})", wind,
                  ToString(s.ss.status));
  }
}

ControlCommand EmpcController::Step(const Measurements& meas, double wind) {
  State& s = *state_;
  const TurbineParams& p = s.turbine;
  const Eigen::VectorXd x0 = ReconstructState(meas);
  UpdateOperatingPoint(wind);
  const bool ss_ok = s.ss.status == QpStatus::kOptimal;
  const int n = s.model.num_states;
  const int np = config_.horizon;

  if (!s.prev_input) {
    s.prev_input = ss_ok ? Eigen::Vector2d(s.ss.rotor_power, s.ss.gen_power)
                         : Eigen::Vector2d::Zero();
  }
  if (s.horizon_wind != wind || s.horizon_version != s.model_version) {
    ConstraintOptions opts;
    opts.num_torque_cuts = config_.num_torque_cuts;
    s.horizon_constraints = BuildConstraints(
        p, *s.tables.available_power, *s.tables.max_thrust, s.model.thrust, n,
        std::vector<double>(np, wind), opts);
    s.horizon_wind = wind;
    s.horizon_version = s.model_version;
  }

  FhocpInputs in;
  in.model = &s.model;
  in.constraints = &s.horizon_constraints;
  in.weights = config_.weights;
  in.velocity_weight = s.velocity_weight;
  in.x0 = x0;
  in.prev_rotor_power = (*s.prev_input)(0);
  in.prev_gen_power = (*s.prev_input)(1);

  FhocpLayout lay;
  ControlCommand cmd;
  QpSolution sol;
  bool solved = false;
  for (int attempt = 0; attempt < 2 && !solved; ++attempt) {
    const bool terminal = attempt == 0 && config_.terminal_constraint && ss_ok;
    if (attempt == 1 && !(config_.terminal_constraint && ss_ok)) break;
    in.terminal_state.reset();
    if (terminal) in.terminal_state = s.ss.x;
    const QuadraticProgram qp = AssembleFhocp(in, &lay);
    WarmStart warm;
    if (s.last_primal.size() == lay.size()) {
      // Shift the previous optimum by one step.
      Eigen::VectorXd z = s.last_primal;
      const int stage = lay.stage_size();
      z.head((np - 1) * stage) = s.last_primal.segment(stage, (np - 1) * stage);
      z.segment((np - 1) * stage, n) = s.last_primal.segment(np * stage, n);
      warm.x = z;
    }
    sol = s.solver.Solve(qp, warm.x.size() ? &warm : nullptr);
    solved = sol.status == QpStatus::kOptimal;
    cmd.mode = terminal || !config_.terminal_constraint
                   ? ControlMode::kNominal
                   : ControlMode::kNoTerminal;
    cmd.iterations += sol.iterations;
    cmd.solve_time += sol.solve_time;
  }
  cmd.status = sol.status;
  cmd.kkt_residual = sol.kkt.Max();

  if (!solved) {
    spdlog::debug("horizon problem failed ({}), holding", ToString(sol.status));
    ControlCommand held;
    if (s.last_command) {
      held = *s.last_command;
    } else {
      const double k = x0(0);
      held.predicted_energy = k;
      held.gen_power = ss_ok ? s.ss.gen_power : 0.0;
      held.rotor_power = ss_ok ? s.ss.rotor_power : 0.0;
      held.torque = std::clamp(
          held.gen_power / (p.generator_efficiency *
                            std::sqrt(2.0 * k / p.EquivalentInertia())),
          0.0, p.torque_g_max);
      held.pitch = AvailablePower(wind, k, *s.tables.cp, p).beta;
    }
    held.mode = ControlMode::kHold;
    held.status = sol.status;
    held.iterations = cmd.iterations;
    held.solve_time = cmd.solve_time;
    held.kkt_residual = cmd.kkt_residual;
    held.terminal_gap = 0.0;
    held.tail_distance = 0.0;
    s.last_primal.resize(0);
    s.last_command = held;
    return held;
  }

  const Eigen::VectorXd& z = sol.x;
  s.last_primal = z;
  s.predicted.assign(np + 1, Eigen::VectorXd());
  for (int q = 0; q <= np; ++q) {
    Eigen::VectorXd xq(n);
    for (int i = 0; i < n; ++i) xq(i) = z(lay.state(q, i));
    s.predicted[q] = s.model.ToSi(xq);
  }
  if (ss_ok) {
    const Eigen::VectorXd xs = s.model.ToScaled(s.ss.x);
    auto dist = [&](int q) {
      return (s.model.ToScaled(s.predicted[q]) - xs).lpNorm<Eigen::Infinity>();
    };
    cmd.terminal_gap = dist(np);
    for (int q = np / 2; q <= np; ++q) {
      cmd.tail_distance = std::max(cmd.tail_distance, dist(q));
    }
  }

  cmd.rotor_power = std::max(0.0, z(lay.rotor_power(0)) * kPowerUnit);
  cmd.gen_power = std::max(0.0, z(lay.gen_power(0)) * kPowerUnit);
  cmd.slack = std::max(0.0, z(lay.slack()) * kEnergyUnit);
  cmd.predicted_energy = s.predicted[1](0);
  const double k_star = std::max(cmd.predicted_energy, 1e-9);
  const double j = p.EquivalentInertia();
  cmd.torque = std::clamp(
      cmd.gen_power / (p.generator_efficiency * std::sqrt(2.0 * k_star / j)),
      0.0, p.torque_g_max);
  try {
    cmd.pitch = PitchInverse(cmd.rotor_power, wind, k_star, *s.tables.cp, p);
  } catch (const InfeasibleTargetError&) {
    cmd.pitch = AvailablePower(wind, k_star, *s.tables.cp, p).beta;
    cmd.pitch_saturated = true;
  }
  cmd.pitch = std::clamp(cmd.pitch, p.beta_min, p.beta_max);
  cmd.thrust_model = s.model.thrust(cmd.rotor_power, x0(0));

  s.prev_input = Eigen::Vector2d(cmd.rotor_power, cmd.gen_power);
  s.last_command = cmd;

  if (debug_log_) {
    nlohmann::json rec = {
        {"wind", wind},
        {"status", ToString(sol.status)},
        {"mode", ToString(cmd.mode)},
        {"iterations", cmd.iterations},
        {"solve_time", cmd.solve_time},
        {"kkt", cmd.kkt_residual},
        {"slack", cmd.slack},
        {"terminal_gap", cmd.terminal_gap},
        {"rotor_power", cmd.rotor_power},
        {"gen_power", cmd.gen_power},
    };
    *debug_log_ << rec.dump() << '\n';
  }
  return cmd;
}

}  // namespace wt_empc
