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

// Reference solver for small strictly convex QPs: enumerates every active
// set of the inequality rows and keeps the one satisfying the KKT
// conditions. Exponential in the row count; meant for n, m <= 10.

#ifndef WT_EMPC_QP_REFERENCE_H_
#define WT_EMPC_QP_REFERENCE_H_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "wt_empc/qp_solver.h"

namespace wt_empc {

// minimize 0.5 x'Hx + g'x  s.t.  E x = e,  G x <= h.
struct DenseQp {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd e_mat;
  Eigen::VectorXd e_rhs;
  Eigen::MatrixXd g_mat;
  Eigen::VectorXd g_rhs;
};

inline std::optional<Eigen::VectorXd> EnumerateActiveSets(const DenseQp& p) {
  const int n = static_cast<int>(p.g.size());
  const int ne = static_cast<int>(p.e_rhs.size());
  const int m = static_cast<int>(p.g_rhs.size());
  std::optional<Eigen::VectorXd> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const int k = ne + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p.h;
    rhs.head(n) = -p.g;
    for (int r = 0; r < ne; ++r) {
      kkt.block(n + r, 0, 1, n) = p.e_mat.row(r);
      rhs(n + r) = p.e_rhs(r);
    }
    for (std::size_t r = 0; r < act.size(); ++r) {
      kkt.block(n + ne + r, 0, 1, n) = p.g_mat.row(act[r]);
      rhs(n + ne + r) = p.g_rhs(act[r]);
    }
    kkt.topRightCorner(n, k) = kkt.bottomLeftCorner(k, n).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    bool ok = true;
    for (std::size_t r = 0; r < act.size() && ok; ++r) {
      ok = sol(n + ne + r) >= -1e-9;
    }
    for (int i = 0; i < m && ok; ++i) {
      ok = p.g_mat.row(i).dot(x) <=
           p.g_rhs(i) + 1e-9 * (1 + std::abs(p.g_rhs(i)));
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(p.h * x) + p.g.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

// Random strictly convex, feasible problem with n, m <= 8 and an
// occasional equality row.
inline DenseQp RandomDenseQp(std::mt19937& rng) {
  std::uniform_int_distribution<int> nd(1, 8), md(0, 8), coin(0, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  const int n = nd(rng);
  const int m = md(rng);
  const int ne = (n > 1 && coin(rng) == 0) ? 1 : 0;
  DenseQp p;
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) l(i, j) = gauss(rng);
  }
  p.h = l * l.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.h = 0.5 * (p.h + p.h.transpose()).eval();
  p.g.resize(n);
  for (int i = 0; i < n; ++i) p.g(i) = 3.0 * gauss(rng);
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0(i) = gauss(rng);
  p.e_mat.resize(ne, n);
  p.e_rhs.resize(ne);
  for (int r = 0; r < ne; ++r) {
    for (int j = 0; j < n; ++j) p.e_mat(r, j) = gauss(rng);
    p.e_rhs(r) = p.e_mat.row(r).dot(x0);
  }
  p.g_mat.resize(m, n);
  p.g_rhs.resize(m);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < n; ++j) p.g_mat(r, j) = gauss(rng);
    p.g_rhs(r) = p.g_mat.row(r).dot(x0) + slack(rng);
  }
  return p;
}

inline QuadraticProgram ToSparse(const DenseQp& p) {
  QuadraticProgram qp;
  qp.hessian = p.h.sparseView();
  qp.gradient = p.g;
  qp.eq_matrix = p.e_mat.sparseView();
  qp.eq_rhs = p.e_rhs;
  qp.ineq_matrix = p.g_mat.sparseView();
  qp.ineq_lower = Eigen::VectorXd::Constant(
      p.g_rhs.size(), -std::numeric_limits<double>::infinity());
  qp.ineq_upper = p.g_rhs;
  return qp;
}

}  // namespace wt_empc

#endif  // WT_EMPC_QP_REFERENCE_H_
