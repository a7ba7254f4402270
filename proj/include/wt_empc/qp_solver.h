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

// Convex QP solver on diagonally equilibrated data: a primal-dual
// interior-point phase, then ADMM operator splitting with adaptive step size
// and infeasibility detection if needed, with active-set polishing.
//
//   minimize    0.5 x'Hx + g'x
//   subject to  A_eq x = b_eq
//               l_in <= A_in x <= u_in
//               l_x  <= x      <= u_x

#ifndef WT_EMPC_QP_SOLVER_H_
#define WT_EMPC_QP_SOLVER_H_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <memory>
#include <string>

namespace wt_empc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct QuadraticProgram {
  SparseMatrix hessian;  // full symmetric storage
  Eigen::VectorXd gradient;
  SparseMatrix eq_matrix;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ineq_matrix;
  Eigen::VectorXd ineq_lower;  // may hold -inf
  Eigen::VectorXd ineq_upper;  // may hold +inf
  Eigen::VectorXd var_lower;   // empty means unbounded
  Eigen::VectorXd var_upper;

  int num_vars() const { return static_cast<int>(gradient.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int num_ineq() const { return static_cast<int>(ineq_lower.size()); }

  // Empty constraint blocks with the right column count.
  static QuadraticProgram Unconstrained(const SparseMatrix& hessian,
                                        const Eigen::VectorXd& gradient);

  double Objective(const Eigen::VectorXd& x) const;

  // Throws std::invalid_argument on inconsistent dimensions, asymmetry
  // beyond 1e-12 (relative), crossed bounds or non-finite data.
  void Validate() const;
};

enum class QpStatus { kOptimal, kInfeasible, kDualInfeasible, kMaxIterations };

std::string ToString(QpStatus status);

// Scaled KKT residuals of a primal-dual pair; each entry is normalised by
// one plus the magnitude of the terms it balances.
struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;  // sign errors of the multipliers
  double complementarity = 0.0;

  double Max() const;
};

struct QpSolution {
  Eigen::VectorXd x;
  // Multipliers, positive when an upper side is active, negative for a lower
  // side, following grad + H x + A' y = 0.
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd bound_duals;
  QpStatus status = QpStatus::kMaxIterations;
  KktResiduals kkt;
  int iterations = 0;
  bool polished = false;
  double solve_time = 0.0;  // s
  double objective = 0.0;
  double dual_objective = 0.0;
  std::string diagnostic;
};

KktResiduals ComputeKktResiduals(const QuadraticProgram& qp,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& eq_duals,
                                 const Eigen::VectorXd& ineq_duals,
                                 const Eigen::VectorXd& bound_duals);

double DualObjective(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& eq_duals,
                     const Eigen::VectorXd& ineq_duals,
                     const Eigen::VectorXd& bound_duals);

struct QpSettings {
  double tolerance = 1e-6;  // on KktResiduals::Max at optimal status
  // Interior-point phase ahead of ADMM; ADMM runs only if it fails.
  bool interior_point = true;
  int interior_point_iterations = 60;
  double interior_point_tolerance = 1e-12;
  // Also polish an accepted interior-point solution, so that active
  // constraints hold exactly rather than to the interior-point tolerance.
  bool polish_interior_point = false;
  int max_iterations = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int scaling_iterations = 10;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  bool polish = true;
  double infeasibility_tolerance = 1e-5;
  double psd_tolerance = 1e-10;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd bound_duals;
};

// Reusable solver. When consecutive problems share H and the constraint
// matrices, the scaling and the factorisation carry over. Single owner.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {});
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;

  // Throws std::invalid_argument if the problem is malformed or H is not
  // positive semidefinite.
  QpSolution Solve(const QuadraticProgram& qp,
                   const WarmStart* warm_start = nullptr);

  const QpSettings& settings() const { return settings_; }

 private:
  struct Workspace;
  QpSettings settings_;
  std::unique_ptr<Workspace> ws_;
};

// One-shot convenience wrapper.
QpSolution SolveQp(const QuadraticProgram& qp, const QpSettings& settings = {});

}  // namespace wt_empc

#endif  // WT_EMPC_QP_SOLVER_H_
