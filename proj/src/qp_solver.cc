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

#include "wt_empc/qp_solver.h"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wt_empc {
namespace {

using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqRhoFactor = 1e3;
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;

double InfNorm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Clamps a norm used as a divisor in the equilibration.
double LimitScale(double norm) {
  if (norm < kMinScaling) return 1.0;
  return std::min(norm, kMaxScaling);
}

VectorXd ColumnInfNorms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.cols());
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out(j) = std::max(out(j), std::abs(it.value()));
    }
  }
  return out;
}

VectorXd RowInfNorms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.rows());
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
    }
  }
  return out;
}

bool SameMatrix(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      a.nonZeros() != b.nonZeros()) {
    return false;
  }
  for (int j = 0; j < a.outerSize(); ++j) {
    SparseMatrix::InnerIterator ia(a, j), ib(b, j);
    for (; ia && ib; ++ia, ++ib) {
      if (ia.row() != ib.row() || ia.value() != ib.value()) return false;
    }
    if (ia || ib) return false;
  }
  return true;
}

// Stacked constraint rows [A_eq; A_in; I_bounded] with bounds l <= Ax <= u.
struct StackedConstraints {
  SparseMatrix a;
  VectorXd lower;
  VectorXd upper;
  std::vector<int> bounded_vars;
};

StackedConstraints Stack(const QuadraticProgram& qp) {
  const int n = qp.num_vars();
  StackedConstraints s;
  for (int j = 0; j < n; ++j) {
    const bool has_lo = qp.var_lower.size() > 0 && qp.var_lower(j) > -kInf;
    const bool has_hi = qp.var_upper.size() > 0 && qp.var_upper(j) < kInf;
    if (has_lo || has_hi) s.bounded_vars.push_back(j);
  }
  const int me = qp.num_eq();
  const int mi = qp.num_ineq();
  const int mb = static_cast<int>(s.bounded_vars.size());
  const int m = me + mi + mb;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(qp.eq_matrix.nonZeros() + qp.ineq_matrix.nonZeros() + mb);
  for (int j = 0; j < qp.eq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.eq_matrix, j); it; ++it) {
      trips.emplace_back(it.row(), j, it.value());
    }
  }
  for (int j = 0; j < qp.ineq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.ineq_matrix, j); it; ++it) {
      trips.emplace_back(me + it.row(), j, it.value());
    }
  }
  s.lower.resize(m);
  s.upper.resize(m);
  s.lower.head(me) = qp.eq_rhs;
  s.upper.head(me) = qp.eq_rhs;
  s.lower.segment(me, mi) = qp.ineq_lower;
  s.upper.segment(me, mi) = qp.ineq_upper;
  for (int k = 0; k < mb; ++k) {
    const int j = s.bounded_vars[k];
    trips.emplace_back(me + mi + k, j, 1.0);
    s.lower(me + mi + k) = qp.var_lower.size() > 0 ? qp.var_lower(j) : -kInf;
    s.upper(me + mi + k) = qp.var_upper.size() > 0 ? qp.var_upper(j) : kInf;
  }
  s.a.resize(m, n);
  s.a.setFromTriplets(trips.begin(), trips.end());
  s.a.makeCompressed();
  return s;
}

// Splits stacked multipliers into the three constraint groups.
void SplitDuals(const QuadraticProgram& qp, const StackedConstraints& s,
                const VectorXd& y, QpSolution* sol) {
  const int me = qp.num_eq();
  const int mi = qp.num_ineq();
  sol->eq_duals = y.head(me);
  sol->ineq_duals = y.segment(me, mi);
  sol->bound_duals = VectorXd::Zero(qp.num_vars());
  for (std::size_t k = 0; k < s.bounded_vars.size(); ++k) {
    sol->bound_duals(s.bounded_vars[k]) = y(me + mi + k);
  }
}

VectorXd StackDuals(const QuadraticProgram& qp, const StackedConstraints& s,
                    const WarmStart& w) {
  const int me = qp.num_eq();
  const int mi = qp.num_ineq();
  VectorXd y = VectorXd::Zero(s.a.rows());
  if (w.eq_duals.size() == me) y.head(me) = w.eq_duals;
  if (w.ineq_duals.size() == mi) y.segment(me, mi) = w.ineq_duals;
  if (w.bound_duals.size() == qp.num_vars()) {
    for (std::size_t k = 0; k < s.bounded_vars.size(); ++k) {
      y(me + mi + k) = w.bound_duals(s.bounded_vars[k]);
    }
  }
  return y;
}

VectorXd Project(const VectorXd& v, const VectorXd& lo, const VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

QuadraticProgram QuadraticProgram::Unconstrained(const SparseMatrix& hessian,
                                                 const VectorXd& gradient) {
  QuadraticProgram qp;
  const int n = static_cast<int>(gradient.size());
  qp.hessian = hessian;
  qp.gradient = gradient;
  qp.eq_matrix.resize(0, n);
  qp.ineq_matrix.resize(0, n);
  return qp;
}

double QuadraticProgram::Objective(const VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + gradient.dot(x);
}

void QuadraticProgram::Validate() const {
  const int n = num_vars();
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("quadratic program: " + what);
  };
  if (hessian.rows() != n || hessian.cols() != n) fail("hessian size");
  if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) {
    fail("equality block size");
  }
  if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_lower.size() ||
      ineq_upper.size() != ineq_lower.size()) {
    fail("inequality block size");
  }
  if ((var_lower.size() != 0 && var_lower.size() != n) ||
      (var_upper.size() != 0 && var_upper.size() != n)) {
    fail("bound vector size");
  }
  if (!gradient.allFinite() || !eq_rhs.allFinite()) fail("non-finite data");
  const SparseMatrix ht = hessian.transpose();
  const double scale = std::max(1.0, ColumnInfNorms(hessian).size() > 0
                                         ? ColumnInfNorms(hessian).maxCoeff()
                                         : 0.0);
  const SparseMatrix diff = hessian - ht;
  for (int j = 0; j < diff.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it) {
      if (!std::isfinite(it.value()) || std::abs(it.value()) > 1e-12 * scale) {
        fail("hessian is not symmetric");
      }
    }
  }
  for (int i = 0; i < ineq_lower.size(); ++i) {
    if (std::isnan(ineq_lower(i)) || std::isnan(ineq_upper(i)) ||
        ineq_lower(i) > ineq_upper(i)) {
      fail("crossed inequality bounds at row " + std::to_string(i));
    }
  }
  for (int j = 0; j < var_lower.size() && j < var_upper.size(); ++j) {
    if (var_lower(j) > var_upper(j)) fail("crossed variable bounds");
  }
}

std::string ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kDualInfeasible:
      return "dual_infeasible";
    case QpStatus::kMaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

double KktResiduals::Max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals ComputeKktResiduals(const QuadraticProgram& qp, const VectorXd& x,
                                 const VectorXd& eq_duals,
                                 const VectorXd& ineq_duals,
                                 const VectorXd& bound_duals) {
  KktResiduals r;
  const VectorXd hx = qp.hessian * x;
  const VectorXd aty = qp.eq_matrix.transpose() * eq_duals +
                       qp.ineq_matrix.transpose() * ineq_duals + bound_duals;
  r.stationarity =
      InfNorm(hx + qp.gradient + aty) /
      (1.0 + std::max({InfNorm(hx), InfNorm(qp.gradient), InfNorm(aty)}));

  const VectorXd ax_eq = qp.eq_matrix * x;
  const VectorXd ax_in = qp.ineq_matrix * x;
  const double act_scale =
      1.0 + std::max({InfNorm(ax_eq), InfNorm(ax_in), InfNorm(x)});
  const double dual_scale =
      1.0 +
      std::max({InfNorm(eq_duals), InfNorm(ineq_duals), InfNorm(bound_duals)});
  double primal = InfNorm(ax_eq - qp.eq_rhs);
  double sign = 0.0;
  double comp = 0.0;
  // One two-sided row: value v, bounds [lo, hi], multiplier y.
  auto row = [&](double v, double lo, double hi, double y) {
    primal = std::max({primal, lo - v, v - hi});
    if (y > 0.0) {
      if (hi == kInf)
        sign = std::max(sign, y);
      else
        comp = std::max(comp,
                        std::min(y / dual_scale, std::abs(hi - v) / act_scale));
    } else if (y < 0.0) {
      if (lo == -kInf)
        sign = std::max(sign, -y);
      else
        comp = std::max(
            comp, std::min(-y / dual_scale, std::abs(v - lo) / act_scale));
    }
  };
  for (int i = 0; i < qp.num_ineq(); ++i) {
    row(ax_in(i), qp.ineq_lower(i), qp.ineq_upper(i), ineq_duals(i));
  }
  for (int j = 0; j < qp.num_vars(); ++j) {
    const double lo = qp.var_lower.size() > 0 ? qp.var_lower(j) : -kInf;
    const double hi = qp.var_upper.size() > 0 ? qp.var_upper(j) : kInf;
    row(x(j), lo, hi, bound_duals(j));
  }
  r.primal = primal / act_scale;
  r.dual = sign / dual_scale;
  r.complementarity = comp;
  return r;
}

double DualObjective(const QuadraticProgram& qp, const VectorXd& x,
                     const VectorXd& eq_duals, const VectorXd& ineq_duals,
                     const VectorXd& bound_duals) {
  // min_x L(x, y) evaluated at stationarity: -x'Hx/2 - support(y).
  double support = eq_duals.dot(qp.eq_rhs);
  auto add = [&support](double lo, double hi, double y) {
    if (y > 0.0) support += y * hi;
    if (y < 0.0) support += y * lo;
  };
  for (int i = 0; i < qp.num_ineq(); ++i) {
    add(qp.ineq_lower(i), qp.ineq_upper(i), ineq_duals(i));
  }
  for (int j = 0; j < qp.num_vars(); ++j) {
    add(qp.var_lower.size() > 0 ? qp.var_lower(j) : -kInf,
        qp.var_upper.size() > 0 ? qp.var_upper(j) : kInf, bound_duals(j));
  }
  return -0.5 * x.dot(qp.hessian * x) - support;
}

struct QpSolver::Workspace {
  // Cache key: unscaled matrices and the equality pattern of the rows.
  SparseMatrix hessian_key;
  SparseMatrix a_key;
  std::vector<char> row_is_eq;

  // Scaled data.
  SparseMatrix p;
  SparseMatrix a;
  SparseMatrix at;
  VectorXd d;  // variable scaling
  VectorXd e;  // row scaling
  double c = 1.0;

  double rho = 0.1;
  VectorXd rho_vec;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower> llt;
  bool pattern_analyzed = false;

  void Equilibrate(const SparseMatrix& p_in, const SparseMatrix& a_in,
                   const VectorXd& q, int iterations) {
    const int n = static_cast<int>(p_in.rows());
    const int m = static_cast<int>(a_in.rows());
    p = p_in;
    a = a_in;
    d = VectorXd::Ones(n);
    e = VectorXd::Ones(m);
    c = 1.0;
    VectorXd qs = q;
    for (int it = 0; it < iterations; ++it) {
      const VectorXd pn = ColumnInfNorms(p);
      const VectorXd an = ColumnInfNorms(a);
      VectorXd dt(n);
      for (int j = 0; j < n; ++j) {
        dt(j) = 1.0 / std::sqrt(LimitScale(std::max(pn(j), an(j))));
      }
      const VectorXd rn = RowInfNorms(a);
      VectorXd et(m);
      for (int i = 0; i < m; ++i) et(i) = 1.0 / std::sqrt(LimitScale(rn(i)));
      p = dt.asDiagonal() * p * dt.asDiagonal();
      a = et.asDiagonal() * a * dt.asDiagonal();
      qs = dt.cwiseProduct(qs);
      d = d.cwiseProduct(dt);
      e = e.cwiseProduct(et);
      const VectorXd pn2 = ColumnInfNorms(p);
      const double mean_p = n > 0 ? pn2.mean() : 0.0;
      const double ct = 1.0 / LimitScale(std::max(mean_p, InfNorm(qs)));
      p *= ct;
      qs *= ct;
      c *= ct;
    }
    p.makeCompressed();
    a.makeCompressed();
    at = a.transpose();
  }

  void SetRho(double new_rho, double sigma) {
    rho = std::clamp(new_rho, kRhoMin, kRhoMax);
    const int m = static_cast<int>(a.rows());
    rho_vec.resize(m);
    for (int i = 0; i < m; ++i) {
      rho_vec(i) = row_is_eq[i] == 1   ? kEqRhoFactor * rho
                   : row_is_eq[i] == 2 ? kRhoMin
                                       : rho;
    }
    Factorize(sigma);
  }

  void Factorize(double sigma) {
    const int n = static_cast<int>(p.rows());
    SparseMatrix id(n, n);
    id.setIdentity();
    SparseMatrix kkt =
        p + sigma * id + SparseMatrix(at * rho_vec.asDiagonal() * a);
    if (!pattern_analyzed) {
      llt.analyzePattern(kkt);
      pattern_analyzed = true;
    }
    llt.factorize(kkt);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("QP linear system factorization failed");
    }
  }
};

QpSolver::QpSolver(QpSettings settings) : settings_(settings) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

namespace {

void CheckPositiveSemidefinite(const SparseMatrix& h, double tol) {
  const int n = static_cast<int>(h.rows());
  if (n == 0) return;
  double scale = 1.0;
  for (int j = 0; j < h.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(h, j); it; ++it) {
      if (it.row() == j) scale = std::max(scale, std::abs(it.value()));
    }
  }
  SparseMatrix id(n, n);
  id.setIdentity();
  const SparseMatrix shifted = h + (tol * scale) * id;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw std::invalid_argument("hessian is not positive semidefinite");
  }
}

// Equality-constrained solve on a guessed active set of the scaled problem.
// Returns false if the reduced KKT system cannot be factorized.
bool SolveOnActiveSet(const SparseMatrix& p, const SparseMatrix& a,
                      const VectorXd& q, const std::vector<int>& active,
                      const std::vector<double>& target, VectorXd* x_out,
                      VectorXd* y_out) {
  const int n = static_cast<int>(p.rows());
  const int m = static_cast<int>(a.rows());
  const int na = static_cast<int>(active.size());
  constexpr double kDelta = 1e-7;
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Eigen::Triplet<double>> exact;
  for (int j = 0; j < n; ++j) {
    for (SparseMatrix::InnerIterator it(p, j); it; ++it) {
      trips.emplace_back(it.row(), j, it.value());
      exact.emplace_back(it.row(), j, it.value());
    }
    trips.emplace_back(j, j, kDelta);
  }
  std::vector<int> pos(m, -1);
  for (int k = 0; k < na; ++k) pos[active[k]] = k;
  for (int j = 0; j < n; ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
      const int k = pos[it.row()];
      if (k < 0) continue;
      trips.emplace_back(n + k, j, it.value());
      trips.emplace_back(j, n + k, it.value());
      exact.emplace_back(n + k, j, it.value());
      exact.emplace_back(j, n + k, it.value());
    }
  }
  for (int k = 0; k < na; ++k) trips.emplace_back(n + k, n + k, -kDelta);
  SparseMatrix kkt(n + na, n + na);
  kkt.setFromTriplets(trips.begin(), trips.end());
  SparseMatrix kkt_exact(n + na, n + na);
  kkt_exact.setFromTriplets(exact.begin(), exact.end());
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return false;
  VectorXd rhs(n + na);
  rhs.head(n) = -q;
  for (int k = 0; k < na; ++k) rhs(n + k) = target[k];
  VectorXd sol = ldlt.solve(rhs);
  for (int it = 0; it < 5; ++it) {
    const VectorXd res = rhs - kkt_exact * sol;
    sol += ldlt.solve(res);
  }
  if (!sol.allFinite()) return false;
  *x_out = sol.head(n);
  *y_out = VectorXd::Zero(m);
  for (int k = 0; k < na; ++k) (*y_out)(active[k]) = sol(n + k);
  return true;
}

// Polishing by primal-dual active-set updates, starting from the ADMM
// guess (z, y). Keeps the candidate with the best KKT quality.
bool Polish(
    const SparseMatrix& p, const SparseMatrix& a, const VectorXd& q,
    const VectorXd& l, const VectorXd& u, const VectorXd& z, const VectorXd& y,
    const std::vector<char>& row_is_eq,
    const std::function<double(const VectorXd&, const VectorXd&)>& quality,
    VectorXd* x_out, VectorXd* y_out, double* best_quality) {
  constexpr int kMaxRounds = 25;
  const int m = static_cast<int>(a.rows());
  VectorXd s = z + y;
  std::vector<int> active, last;
  bool found = false;
  *best_quality = kInf;
  for (int round = 0; round < kMaxRounds; ++round) {
    active.clear();
    std::vector<double> target;
    for (int i = 0; i < m; ++i) {
      if (row_is_eq[i] == 1) {
        active.push_back(i);
        target.push_back(l(i));
      } else if (l(i) > -kInf && s(i) < l(i)) {
        active.push_back(i);
        target.push_back(l(i));
      } else if (u(i) < kInf && s(i) > u(i)) {
        active.push_back(i);
        target.push_back(u(i));
      }
    }
    if (round > 0 && active == last) break;
    last = active;
    VectorXd xc, yc;
    if (!SolveOnActiveSet(p, a, q, active, target, &xc, &yc)) break;
    const double qual = quality(xc, yc);
    if (qual < *best_quality) {
      *best_quality = qual;
      *x_out = xc;
      *y_out = yc;
      found = true;
    }
    s = a * xc + yc;
  }
  return found;
}

// Mehrotra predictor-corrector interior-point method on the scaled problem.
// Rows with l == u become equalities, every finite side of the remaining
// rows becomes a one-sided constraint c'x <= d with slack s and multiplier
// lambda. `accept` is queried once the scaled residuals fall below
// `tol`; iteration continues until it agrees or progress stalls.
class InteriorPoint {
 public:
  InteriorPoint(const SparseMatrix& p, const SparseMatrix& a, const VectorXd& q,
                const VectorXd& l, const VectorXd& u,
                const std::vector<char>& row_is_eq)
      : p_(p), q_(q), m_(static_cast<int>(a.rows())) {
    const int n = static_cast<int>(p.rows());
    std::vector<Eigen::Triplet<double>> se, sc;
    for (int i = 0; i < m_; ++i) {
      if (row_is_eq[i] == 1) {
        se.emplace_back(static_cast<int>(b_.size()), i, 1.0);
        eq_rows_.push_back(i);
        b_.push_back(l(i));
        continue;
      }
      if (u(i) < kInf) {
        sc.emplace_back(static_cast<int>(d_.size()), i, 1.0);
        side_rows_.push_back(i);
        side_sign_.push_back(1.0);
        d_.push_back(u(i));
      }
      if (l(i) > -kInf) {
        sc.emplace_back(static_cast<int>(d_.size()), i, -1.0);
        side_rows_.push_back(i);
        side_sign_.push_back(-1.0);
        d_.push_back(-l(i));
      }
    }
    const int me = static_cast<int>(b_.size());
    const int mc = static_cast<int>(d_.size());
    SparseMatrix sel_e(me, m_), sel_c(mc, m_);
    sel_e.setFromTriplets(se.begin(), se.end());
    sel_c.setFromTriplets(sc.begin(), sc.end());
    ae_ = sel_e * a;
    c_ = sel_c * a;
    ct_ = c_.transpose();
    aet_ = ae_.transpose();
    b_vec_ = Eigen::Map<const VectorXd>(b_.data(), me);
    d_vec_ = Eigen::Map<const VectorXd>(d_.data(), mc);
    n_ = n;
  }

  bool Run(int max_iterations, double tol,
           const std::function<bool(const VectorXd&, const VectorXd&)>& accept,
           VectorXd* x_out, VectorXd* y_out, int* iterations) {
    const int n = n_;
    const int me = static_cast<int>(b_vec_.size());
    const int mc = static_cast<int>(d_vec_.size());
    VectorXd x = VectorXd::Zero(n);
    VectorXd nu = VectorXd::Zero(me);
    VectorXd s = VectorXd::Ones(mc);
    VectorXd lam = VectorXd::Ones(mc);

    // Starting point: least-squares-like solve with unit barrier weights.
    if (!Factor(VectorXd::Ones(mc))) return false;
    {
      VectorXd dx, dnu;
      Solve(-q_ + ct_ * d_vec_, b_vec_, &dx, &dnu);
      x = dx;
      nu = dnu;
      if (mc > 0) s = (d_vec_ - c_ * x).cwiseMax(1.0);
    }
    const double q_scale = 1.0 + InfNorm(q_);
    const double b_scale = 1.0 + InfNorm(b_vec_);
    const double d_scale = 1.0 + InfNorm(d_vec_);
    double best_merit = kInf;
    int stall = 0;
    for (int it = 1; it <= max_iterations; ++it) {
      *iterations = it;
      const VectorXd rd = p_ * x + q_ + aet_ * nu + ct_ * lam;
      const VectorXd re = ae_ * x - b_vec_;
      const VectorXd ri = c_ * x + s - d_vec_;
      const double mu = mc > 0 ? s.dot(lam) / mc : 0.0;
      const double merit =
          std::max({InfNorm(rd) / q_scale, InfNorm(re) / b_scale,
                    InfNorm(ri) / d_scale, mu});
      if (merit <= tol) {
        Assemble(x, nu, lam, x_out, y_out);
        if (accept(*x_out, *y_out)) return true;
      }
      if (merit < 0.5 * best_merit) {
        best_merit = merit;
        stall = 0;
      } else if (++stall >= 8) {
        break;
      }
      if (!std::isfinite(merit)) break;

      const VectorXd theta = lam.cwiseQuotient(s);
      if (!Factor(theta)) break;
      auto direction = [&](const VectorXd& rc, VectorXd* dx, VectorXd* dnu,
                           VectorXd* ds, VectorXd* dl) {
        const VectorXd w = (rc + lam.cwiseProduct(ri)).cwiseQuotient(s);
        Solve(-rd - ct_ * w, -re, dx, dnu);
        *ds = -ri - c_ * *dx;
        *dl = (rc - lam.cwiseProduct(*ds)).cwiseQuotient(s);
      };
      VectorXd dx, dnu, ds, dl;
      direction(-s.cwiseProduct(lam), &dx, &dnu, &ds, &dl);
      double step = std::min(MaxStep(s, ds), MaxStep(lam, dl));
      if (mc > 0) {
        const double mu_aff = (s + step * ds).dot(lam + step * dl) / mc;
        const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);
        const VectorXd rc = VectorXd::Constant(mc, sigma * mu) -
                            s.cwiseProduct(lam) - ds.cwiseProduct(dl);
        direction(rc, &dx, &dnu, &ds, &dl);
        step =
            std::min(1.0, 0.995 * std::min(MaxStep(s, ds), MaxStep(lam, dl)));
      } else {
        step = 1.0;
      }
      x += step * dx;
      nu += step * dnu;
      s += step * ds;
      lam += step * dl;
    }
    Assemble(x, nu, lam, x_out, y_out);
    return false;
  }

 private:
  static double MaxStep(const VectorXd& v, const VectorXd& dv) {
    double step = kInf;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
    }
    return std::min(step, 1.0 / 0.995);
  }

  void Assemble(const VectorXd& x, const VectorXd& nu, const VectorXd& lam,
                VectorXd* x_out, VectorXd* y_out) const {
    *x_out = x;
    *y_out = VectorXd::Zero(m_);
    for (std::size_t k = 0; k < eq_rows_.size(); ++k) {
      (*y_out)(eq_rows_[k]) += nu(k);
    }
    for (std::size_t k = 0; k < side_rows_.size(); ++k) {
      (*y_out)(side_rows_[k]) += side_sign_[k] * lam(k);
    }
  }

  bool Factor(const VectorXd& theta) {
    constexpr double kReg = 1e-9;
    const int n = n_;
    const int me = static_cast<int>(b_vec_.size());
    const SparseMatrix top = p_ + SparseMatrix(ct_ * theta.asDiagonal() * c_);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(top.nonZeros() + 2 * ae_.nonZeros() + n + me);
    for (int j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(top, j); it; ++it) {
        if (it.row() >= j) trips.emplace_back(it.row(), j, it.value());
      }
      trips.emplace_back(j, j, 0.0);
    }
    for (int j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(ae_, j); it; ++it) {
        trips.emplace_back(n + it.row(), j, it.value());
      }
    }
    for (int k = 0; k < me; ++k) trips.emplace_back(n + k, n + k, 0.0);
    exact_.resize(n + me, n + me);
    exact_.setFromTriplets(trips.begin(), trips.end());
    exact_.makeCompressed();
    SparseMatrix reg = exact_;
    for (int j = 0; j < n + me; ++j) reg.coeffRef(j, j) += j < n ? kReg : -kReg;
    if (!analyzed_) {
      ldlt_.analyzePattern(reg);
      analyzed_ = true;
    }
    ldlt_.factorize(reg);
    return ldlt_.info() == Eigen::Success;
  }

  // Solves the unregularised reduced system by refinement on the
  // regularised factorisation.
  void Solve(const VectorXd& r1, const VectorXd& r2, VectorXd* dx,
             VectorXd* dnu) {
    const int n = n_;
    const int me = static_cast<int>(r2.size());
    VectorXd rhs(n + me);
    rhs << r1, r2;
    VectorXd sol = ldlt_.solve(rhs);
    for (int k = 0; k < 3; ++k) {
      const VectorXd res = rhs - exact_.selfadjointView<Eigen::Lower>() * sol;
      sol += ldlt_.solve(res);
    }
    *dx = sol.head(n);
    *dnu = sol.tail(me);
  }

  const SparseMatrix& p_;
  const VectorXd& q_;
  int m_;
  int n_ = 0;
  std::vector<int> eq_rows_;
  std::vector<int> side_rows_;
  std::vector<double> side_sign_;
  std::vector<double> b_;
  std::vector<double> d_;
  VectorXd b_vec_;
  VectorXd d_vec_;
  SparseMatrix ae_, aet_, c_, ct_;
  SparseMatrix exact_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt_;
  bool analyzed_ = false;
};

}  // namespace

QpSolution QpSolver::Solve(const QuadraticProgram& qp,
                           const WarmStart* warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  qp.Validate();
  const QpSettings& st = settings_;
  const int n = qp.num_vars();
  StackedConstraints sc = Stack(qp);
  const int m = static_cast<int>(sc.a.rows());

  std::vector<char> row_is_eq(m);
  for (int i = 0; i < m; ++i) {
    row_is_eq[i] = sc.lower(i) == sc.upper(i)                      ? 1
                   : (sc.lower(i) == -kInf && sc.upper(i) == kInf) ? 2
                                                                   : 0;
  }

  if (!ws_) ws_ = std::make_unique<Workspace>();
  Workspace& w = *ws_;
  const bool same_matrices = w.p.size() > 0 &&
                             SameMatrix(w.hessian_key, qp.hessian) &&
                             SameMatrix(w.a_key, sc.a);
  if (!same_matrices) {
    CheckPositiveSemidefinite(qp.hessian, st.psd_tolerance);
    w.hessian_key = qp.hessian;
    w.a_key = sc.a;
    w.pattern_analyzed = false;
    w.row_is_eq = row_is_eq;
    w.Equilibrate(qp.hessian, sc.a, qp.gradient, st.scaling_iterations);
    w.SetRho(st.rho, st.sigma);
  } else if (w.row_is_eq != row_is_eq) {
    w.row_is_eq = row_is_eq;
    w.SetRho(w.rho, st.sigma);
  }

  const VectorXd q = w.c * w.d.cwiseProduct(qp.gradient);
  const VectorXd l = w.e.cwiseProduct(sc.lower);
  const VectorXd u = w.e.cwiseProduct(sc.upper);
  const VectorXd d_inv = w.d.cwiseInverse();
  const VectorXd e_inv = w.e.cwiseInverse();

  VectorXd x = VectorXd::Zero(n);
  VectorXd y = VectorXd::Zero(m);
  if (warm_start && warm_start->x.size() == n) {
    x = d_inv.cwiseProduct(warm_start->x);
    y = w.c * e_inv.cwiseProduct(StackDuals(qp, sc, *warm_start));
  }
  VectorXd z = Project(w.a * x, l, u);

  QpSolution sol;
  auto finish = [&](QpStatus status, const VectorXd& xs, const VectorXd& ys) {
    sol.status = status;
    sol.x = w.d.cwiseProduct(xs);
    const VectorXd y_unscaled = w.e.cwiseProduct(ys) / w.c;
    SplitDuals(qp, sc, y_unscaled, &sol);
    sol.kkt = ComputeKktResiduals(qp, sol.x, sol.eq_duals, sol.ineq_duals,
                                  sol.bound_duals);
    sol.objective = qp.Objective(sol.x);
    sol.dual_objective =
        DualObjective(qp, sol.x, sol.eq_duals, sol.ineq_duals, sol.bound_duals);
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  };
  // Unscaled KKT quality of a scaled iterate pair.
  auto quality = [&](const VectorXd& xs, const VectorXd& ys) {
    QpSolution tmp;
    const VectorXd xu = w.d.cwiseProduct(xs);
    SplitDuals(qp, sc, w.e.cwiseProduct(ys) / w.c, &tmp);
    return ComputeKktResiduals(qp, xu, tmp.eq_duals, tmp.ineq_duals,
                               tmp.bound_duals)
        .Max();
  };

  if (m == 0 && n > 0) {
    // Unconstrained: one solve of the regularised normal equations with
    // iterative refinement.
    VectorXd xs = w.llt.solve(-q);
    for (int it = 0; it < 10; ++it) xs += w.llt.solve(-q - w.p * xs);
    finish(quality(xs, y) <= st.tolerance ? QpStatus::kOptimal
                                          : QpStatus::kDualInfeasible,
           xs, y);
    return sol;
  }

  int ipm_iterations = 0;
  if (st.interior_point) {
    InteriorPoint ipm(w.p, w.a, q, l, u, w.row_is_eq);
    VectorXd x_best, y_best;
    double best = kInf;
    bool polished = false;
    auto accept = [&](const VectorXd& xc, const VectorXd& yc) {
      const double qual = quality(xc, yc);
      if (qual < best) {
        best = qual;
        x_best = xc;
        y_best = yc;
      }
      return best <= st.tolerance;
    };
    VectorXd xi, yi;
    ipm.Run(st.interior_point_iterations, st.interior_point_tolerance, accept,
            &xi, &yi, &ipm_iterations);
    const bool refine = best <= st.tolerance && st.polish_interior_point;
    if ((best > st.tolerance || refine) && st.polish && xi.allFinite() &&
        yi.allFinite()) {
      VectorXd xp, yp;
      double qual_p = kInf;
      if (Polish(w.p, w.a, q, l, u, w.a * xi, yi, w.row_is_eq, quality, &xp,
                 &yp, &qual_p) &&
          (qual_p < best || (refine && qual_p <= st.tolerance))) {
        best = qual_p;
        x_best = xp;
        y_best = yp;
        polished = true;
      }
    }
    if (best <= st.tolerance) {
      sol.iterations = ipm_iterations;
      sol.polished = polished;
      finish(QpStatus::kOptimal, x_best, y_best);
      return sol;
    }
    if (xi.allFinite() && yi.allFinite()) {
      // Hand the interior iterate to ADMM, which also certifies
      // infeasibility.
      x = xi;
      y = yi;
      z = Project(w.a * x, l, u);
    }
  }

  double eps = 1e-3;
  const double alpha = st.alpha;
  int iter = 0;
  VectorXd x_prev, y_prev, z_prev;
  while (iter < st.max_iterations) {
    ++iter;
    x_prev = x;
    z_prev = z;
    y_prev = y;
    const VectorXd rhs =
        st.sigma * x - q + w.at * (w.rho_vec.cwiseProduct(z) - y);
    const VectorXd x_tilde = w.llt.solve(rhs);
    const VectorXd z_tilde = w.a * x_tilde;
    x = alpha * x_tilde + (1.0 - alpha) * x_prev;
    const VectorXd z_relax = alpha * z_tilde + (1.0 - alpha) * z_prev;
    z = Project(z_relax + y.cwiseQuotient(w.rho_vec), l, u);
    y = y + w.rho_vec.cwiseProduct(z_relax - z);

    const bool check = iter % 5 == 0 || iter == st.max_iterations;
    if (!check) continue;

    // Residuals in the original scaling.
    const VectorXd ax = w.a * x;
    const VectorXd px = w.p * x;
    const VectorXd aty = w.at * y;
    const double prim = InfNorm(e_inv.cwiseProduct(ax - z));
    const double dual = InfNorm(d_inv.cwiseProduct(px + q + aty)) / w.c;
    const double prim_scale = std::max(InfNorm(e_inv.cwiseProduct(ax)),
                                       InfNorm(e_inv.cwiseProduct(z)));
    const double dual_scale = std::max({InfNorm(d_inv.cwiseProduct(px)),
                                        InfNorm(d_inv.cwiseProduct(aty)),
                                        InfNorm(d_inv.cwiseProduct(q))}) /
                              w.c;

    if (prim <= eps + eps * prim_scale && dual <= eps + eps * dual_scale) {
      double best = quality(x, y);
      VectorXd xb = x, yb = y;
      bool polished = false;
      if (st.polish && best > st.tolerance) {
        VectorXd xp, yp;
        double qual = kInf;
        if (Polish(w.p, w.a, q, l, u, z, y, w.row_is_eq, quality, &xp, &yp,
                   &qual)) {
          if (qual < best) {
            best = qual;
            xb = xp;
            yb = yp;
            polished = true;
          }
        }
      }
      if (best <= st.tolerance) {
        sol.iterations = ipm_iterations + iter;
        sol.polished = polished;
        finish(QpStatus::kOptimal, xb, yb);
        return sol;
      }
      eps = std::max(eps * 1e-2, 1e-12);
    }

    // Infeasibility certificates from successive differences.
    const double eps_inf = st.infeasibility_tolerance;
    VectorXd dy = y - y_prev;
    for (int i = 0; i < m; ++i) {
      if (u(i) == kInf)
        dy(i) = l(i) == -kInf ? 0.0 : std::min(dy(i), 0.0);
      else if (l(i) == -kInf)
        dy(i) = std::max(dy(i), 0.0);
    }
    const double dy_norm = InfNorm(w.e.cwiseProduct(dy));
    if (dy_norm > 1e-12) {
      double support = 0.0;
      for (int i = 0; i < m; ++i) {
        if (dy(i) > 0.0) support += u(i) * dy(i);
        if (dy(i) < 0.0) support += l(i) * dy(i);
      }
      if (InfNorm(d_inv.cwiseProduct(w.at * dy)) <= eps_inf * dy_norm &&
          support < -eps_inf * dy_norm) {
        sol.iterations = ipm_iterations + iter;
        sol.diagnostic = "primal infeasibility certificate found";
        finish(QpStatus::kInfeasible, x, y);
        return sol;
      }
    }
    const VectorXd dx = x - x_prev;
    const double dx_norm = InfNorm(w.d.cwiseProduct(dx));
    if (dx_norm > 1e-12 && q.dot(dx) / w.c < -eps_inf * dx_norm &&
        InfNorm(d_inv.cwiseProduct(w.p * dx)) <= w.c * eps_inf * dx_norm) {
      const VectorXd adx = e_inv.cwiseProduct(w.a * dx);
      bool recession = true;
      for (int i = 0; i < m && recession; ++i) {
        if (u(i) < kInf && adx(i) > eps_inf * dx_norm) recession = false;
        if (l(i) > -kInf && adx(i) < -eps_inf * dx_norm) recession = false;
      }
      if (recession) {
        sol.iterations = ipm_iterations + iter;
        sol.diagnostic = "dual infeasibility certificate found";
        finish(QpStatus::kDualInfeasible, x, y);
        return sol;
      }
    }

    if (st.adaptive_rho && iter % st.adaptive_rho_interval == 0) {
      // Balance the residuals of the equilibrated problem.
      const double p_rel =
          InfNorm(ax - z) / (std::max(InfNorm(ax), InfNorm(z)) + 1e-30);
      const double d_rel =
          InfNorm(px + q + aty) /
          (std::max({InfNorm(px), InfNorm(aty), InfNorm(q)}) + 1e-30);
      double new_rho = w.rho * std::sqrt(p_rel / (d_rel + 1e-30));
      new_rho = std::clamp(new_rho, kRhoMin, kRhoMax);
      if (new_rho > 5.0 * w.rho || new_rho < 0.2 * w.rho) {
        w.SetRho(new_rho, st.sigma);
      }
    }
  }
  sol.iterations = ipm_iterations + iter;
  sol.diagnostic = "iteration limit reached";
  // Last attempt: polish whatever the iterates suggest.
  VectorXd xb = x, yb = y;
  if (st.polish) {
    VectorXd xp, yp;
    double qual = kInf;
    if (Polish(w.p, w.a, q, l, u, z, y, w.row_is_eq, quality, &xp, &yp,
               &qual) &&
        qual < quality(x, y)) {
      xb = xp;
      yb = yp;
      sol.polished = true;
    }
  }
  finish(quality(xb, yb) <= st.tolerance ? QpStatus::kOptimal
                                         : QpStatus::kMaxIterations,
         xb, yb);
  return sol;
}

QpSolution SolveQp(const QuadraticProgram& qp, const QpSettings& settings) {
  QpSolver solver(settings);
  return solver.Solve(qp);
}

}  // namespace wt_empc
