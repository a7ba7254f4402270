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

#ifndef WT_EMPC_COEFF_SURFACE_H_
#define WT_EMPC_COEFF_SURFACE_H_

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

namespace wt_empc {

enum class CoeffKind { kPower, kThrust };

// Upper bound accepted for each kind: Betz limit for C_p, 2 for C_t.
double CoeffUpperBound(CoeffKind kind);

// Gridded aerodynamic coefficient over tip-speed ratio and pitch (rad).
// Lookups interpolate bilinearly and clamp queries to the grid edges.
class CoeffSurface {
 public:
  // values(i, j) belongs to (lambda_grid[i], beta_grid[j]).
  CoeffSurface(std::vector<double> lambda_grid, std::vector<double> beta_grid,
               Eigen::MatrixXd values, CoeffKind kind);

  double Lookup(double lambda, double beta) const;

  // Value at the j-th pitch node, interpolated along lambda only. Along the
  // pitch axis the surface is linear between these nodes.
  double AtBetaNode(double lambda, int j) const;

  const std::vector<double>& lambda_grid() const { return lambda_grid_; }
  const std::vector<double>& beta_grid() const { return beta_grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  CoeffKind kind() const { return kind_; }

 private:
  std::vector<double> lambda_grid_;
  std::vector<double> beta_grid_;
  Eigen::MatrixXd values_;
  CoeffKind kind_;
};

// Exponential C_p fit c1 (c2/li - c3 b - c4) exp(-c5/li) + c6 lambda with
// 1/li = 1/(lambda + 0.08 b) - 0.035/(b^3 + 1), b in degrees. Clipped to
// [0, Betz].
double AnalyticPowerCoefficient(double lambda, double beta_rad);

// Thrust coefficient consistent with a power coefficient through actuator
// disc momentum theory: C_p = 4a(1-a)^2, C_t = 4a(1-a), a in [0, 1/3].
double MomentumThrustCoefficient(double cp);

CoeffSurface MakeAnalyticPowerSurface(std::vector<double> lambda_grid,
                                      std::vector<double> beta_grid);
CoeffSurface MakeMomentumThrustSurface(const CoeffSurface& cp);

// Default grids: lambda 1..30 step 0.1, pitch 0..45 deg step 0.5 deg.
std::vector<double> DefaultLambdaGrid();
std::vector<double> DefaultBetaGrid();

// CSV with header `lambda,beta,value`, lambda-major / beta-minor rows.
CoeffSurface ReadCoeffSurfaceCsv(std::istream& in, CoeffKind kind);
CoeffSurface LoadCoeffSurfaceCsv(const std::string& path, CoeffKind kind);
void WriteCoeffSurfaceCsv(std::ostream& out, const CoeffSurface& surface);

}  // namespace wt_empc

#endif  // WT_EMPC_COEFF_SURFACE_H_
