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

#include "wt_empc/coeff_surface.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

constexpr double kBetzLimit = 0.593;
constexpr double kDegPerRad = 180.0 / std::numbers::pi;

void CheckAxis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2) {
    throw std::invalid_argument(std::string(name) + " grid needs >= 2 points");
  }
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw std::invalid_argument(std::string(name) +
                                  " grid must be strictly increasing");
    }
  }
}

// Cell index i and weight w such that x ~ (1-w) axis[i] + w axis[i+1];
// queries outside the axis clamp to the edge.
std::pair<int, double> Bracket(const std::vector<double>& axis, double x) {
  const int n = static_cast<int>(axis.size());
  if (x <= axis.front()) return {0, 0.0};
  if (x >= axis.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const int i = static_cast<int>(it - axis.begin()) - 1;
  return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

std::vector<double> Range(double start, double stop, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((stop - start) / step));
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) out.push_back(start + i * step);
  return out;
}

}  // namespace

double CoeffUpperBound(CoeffKind kind) {
  return kind == CoeffKind::kPower ? kBetzLimit : 2.0;
}

CoeffSurface::CoeffSurface(std::vector<double> lambda_grid,
                           std::vector<double> beta_grid,
                           Eigen::MatrixXd values, CoeffKind kind)
    : lambda_grid_(std::move(lambda_grid)),
      beta_grid_(std::move(beta_grid)),
      values_(std::move(values)),
      kind_(kind) {
  CheckAxis(lambda_grid_, "lambda");
  CheckAxis(beta_grid_, "beta");
  if (values_.rows() != static_cast<Eigen::Index>(lambda_grid_.size()) ||
      values_.cols() != static_cast<Eigen::Index>(beta_grid_.size())) {
    throw std::invalid_argument("coefficient grid does not match its axes");
  }
  const double upper = CoeffUpperBound(kind_);
  if (!values_.allFinite() || values_.minCoeff() < 0.0 ||
      values_.maxCoeff() > upper) {
    throw std::invalid_argument("coefficient values outside [0, " +
                                std::to_string(upper) + "]");
  }
}

double CoeffSurface::Lookup(double lambda, double beta) const {
  const auto [i, wl] = Bracket(lambda_grid_, lambda);
  const auto [j, wb] = Bracket(beta_grid_, beta);
  const double v00 = values_(i, j);
  const double v01 = values_(i, j + 1);
  const double v10 = values_(i + 1, j);
  const double v11 = values_(i + 1, j + 1);
  return (1.0 - wl) * ((1.0 - wb) * v00 + wb * v01) +
         wl * ((1.0 - wb) * v10 + wb * v11);
}

double CoeffSurface::AtBetaNode(double lambda, int j) const {
  const auto [i, wl] = Bracket(lambda_grid_, lambda);
  return (1.0 - wl) * values_(i, j) + wl * values_(i + 1, j);
}

double AnalyticPowerCoefficient(double lambda, double beta_rad) {
  const double b = beta_rad * kDegPerRad;
  const double inv_li = 1.0 / (lambda + 0.08 * b) - 0.035 / (b * b * b + 1.0);
  const double cp =
      0.5176 * (116.0 * inv_li - 0.4 * b - 5.0) * std::exp(-21.0 * inv_li) +
      0.0068 * lambda;
  if (!std::isfinite(cp)) return 0.0;
  return std::clamp(cp, 0.0, kBetzLimit);
}

double MomentumThrustCoefficient(double cp) {
  // 4a(1-a)^2 is increasing on [0, 1/3] and reaches 16/27 there.
  constexpr double kMaxInduction = 1.0 / 3.0;
  if (cp <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = kMaxInduction;
  if (cp >= 16.0 / 27.0) {
    lo = hi;
  } else {
    for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f = 4.0 * mid * (1.0 - mid) * (1.0 - mid);
      (f < cp ? lo : hi) = mid;
    }
  }
  const double a = 0.5 * (lo + hi);
  return 4.0 * a * (1.0 - a);
}

CoeffSurface MakeAnalyticPowerSurface(std::vector<double> lambda_grid,
                                      std::vector<double> beta_grid) {
  Eigen::MatrixXd values(lambda_grid.size(), beta_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    for (std::size_t j = 0; j < beta_grid.size(); ++j) {
      values(i, j) = AnalyticPowerCoefficient(lambda_grid[i], beta_grid[j]);
    }
  }
  return CoeffSurface(std::move(lambda_grid), std::move(beta_grid),
                      std::move(values), CoeffKind::kPower);
}

CoeffSurface MakeMomentumThrustSurface(const CoeffSurface& cp) {
  Eigen::MatrixXd values = cp.values().unaryExpr(
      [](double c) { return MomentumThrustCoefficient(c); });
  return CoeffSurface(cp.lambda_grid(), cp.beta_grid(), std::move(values),
                      CoeffKind::kThrust);
}

std::vector<double> DefaultLambdaGrid() { return Range(1.0, 30.0, 0.1); }

std::vector<double> DefaultBetaGrid() {
  std::vector<double> deg = Range(0.0, 45.0, 0.5);
  for (double& d : deg) d /= kDegPerRad;
  return deg;
}

CoeffSurface ReadCoeffSurfaceCsv(std::istream& in, CoeffKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty coefficient file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lambda,beta,value") {
    throw ParseError("coefficient file header must be 'lambda,beta,value'");
  }
  std::vector<double> lambdas, betas, values;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double l = 0, b = 0, v = 0;
    if (!(fields >> l >> b >> v)) {
      throw ParseError("coefficient file row " + std::to_string(row) +
                       " is malformed");
    }
    lambdas.push_back(l);
    betas.push_back(b);
    values.push_back(v);
  }
  // Recover the beta axis from the first lambda block.
  std::vector<double> beta_axis;
  for (std::size_t k = 0; k < betas.size() && lambdas[k] == lambdas.front();
       ++k) {
    beta_axis.push_back(betas[k]);
  }
  const std::size_t nb = beta_axis.size();
  if (nb == 0 || values.size() % nb != 0) {
    throw ParseError("coefficient grid is incomplete");
  }
  const std::size_t nl = values.size() / nb;
  std::vector<double> lambda_axis(nl);
  Eigen::MatrixXd grid(nl, nb);
  for (std::size_t i = 0; i < nl; ++i) {
    lambda_axis[i] = lambdas[i * nb];
    for (std::size_t j = 0; j < nb; ++j) {
      const std::size_t k = i * nb + j;
      if (lambdas[k] != lambda_axis[i] || betas[k] != beta_axis[j]) {
        throw ParseError(
            "coefficient grid is incomplete or out of order at row " +
            std::to_string(k + 2));
      }
      grid(i, j) = values[k];
    }
  }
  try {
    return CoeffSurface(std::move(lambda_axis), std::move(beta_axis),
                        std::move(grid), kind);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

CoeffSurface LoadCoeffSurfaceCsv(const std::string& path, CoeffKind kind) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open coefficient file " + path);
  return ReadCoeffSurfaceCsv(in, kind);
}

void WriteCoeffSurfaceCsv(std::ostream& out, const CoeffSurface& surface) {
  out << "lambda,beta,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < surface.lambda_grid().size(); ++i) {
    for (std::size_t j = 0; j < surface.beta_grid().size(); ++j) {
      out << surface.lambda_grid()[i] << ',' << surface.beta_grid()[j] << ','
          << surface.values()(i, j) << '\n';
    }
  }
}

}  // namespace wt_empc
