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

#include "wt_empc/tower_modal.h"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Roots of cos(x) cosh(x) = -1 for the first cantilever modes.
constexpr double kCantileverRoots[] = {1.875104068711961, 4.694091132974175,
                                       7.854757438237613, 10.99554073487547};

double CantileverShape(double beta_l, double z) {
  const double sigma = (std::cosh(beta_l) + std::cos(beta_l)) /
                       (std::sinh(beta_l) + std::sin(beta_l));
  const double x = beta_l * z;
  return std::cosh(x) - std::cos(x) - sigma * (std::sinh(x) - std::sin(x));
}

void CheckUnitInterval(double z) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw std::domain_error("normalized height outside [0, 1]");
  }
}

}  // namespace

ModeShapeSet::ModeShapeSet(Eigen::MatrixXd coefficients,
                           bool check_normalization)
    : coefficients_(std::move(coefficients)), normalized_(check_normalization) {
  if (coefficients_.rows() < 1 || coefficients_.cols() < 1) {
    throw std::invalid_argument("mode shape set is empty");
  }
  if (coefficients_.cols() > coefficients_.rows()) {
    throw std::invalid_argument("more modes than degrees of freedom");
  }
  if (!coefficients_.allFinite()) {
    throw std::invalid_argument("mode shape coefficients must be finite");
  }
  if (check_normalization) {
    for (int i = 0; i < num_modes(); ++i) {
      if (std::abs(ShapeAt(i, 0.0)) > 1e-9 ||
          std::abs(ShapeAt(i, 1.0) - 1.0) > 1e-9) {
        throw std::invalid_argument("mode " + std::to_string(i + 1) +
                                    " is not 0 at the base and 1 at the tip");
      }
    }
  }
}

double ModeShapeSet::ShapeAt(int mode, double z) const {
  CheckUnitInterval(z);
  if (mode < 0 || mode >= num_modes()) {
    throw std::out_of_range("mode index out of range");
  }
  double acc = 0.0;
  for (int k = num_dofs() - 1; k >= 0; --k) {
    acc = acc * z + coefficients_(k, mode);
  }
  return acc;
}

ModeShapeSet ModeShapeSet::Truncated(int num_modes_kept) const {
  if (num_modes_kept < 1 || num_modes_kept > num_modes()) {
    throw std::invalid_argument("cannot keep " +
                                std::to_string(num_modes_kept) + " modes");
  }
  return ModeShapeSet(coefficients_.leftCols(num_modes_kept), normalized_);
}

ModeShapeSet CantileverModeShapes(int num_dofs, int num_modes) {
  if (num_dofs < 3) throw std::invalid_argument("need at least 3 dofs");
  if (num_modes < 1 || num_modes > num_dofs ||
      num_modes > static_cast<int>(std::size(kCantileverRoots))) {
    throw std::invalid_argument("unsupported number of cantilever modes");
  }
  // p(z) = z^2 + sum_{k>=3} c_k (z^k - z^2) has p(0) = p'(0) = 0, p(1) = 1.
  constexpr int kSamples = 201;
  const int free = num_dofs - 3;
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(num_dofs, num_modes);
  for (int i = 0; i < num_modes; ++i) {
    const double beta_l = kCantileverRoots[i];
    const double tip = CantileverShape(beta_l, 1.0);
    coeffs(2, i) = 1.0;
    if (free == 0) continue;
    Eigen::MatrixXd basis(kSamples, free);
    Eigen::VectorXd rhs(kSamples);
    for (int s = 0; s < kSamples; ++s) {
      const double z = static_cast<double>(s) / (kSamples - 1);
      rhs(s) = CantileverShape(beta_l, z) / tip - z * z;
      for (int k = 0; k < free; ++k) {
        basis(s, k) = std::pow(z, k + 3) - z * z;
      }
    }
    const Eigen::VectorXd c = basis.colPivHouseholderQr().solve(rhs);
    for (int k = 0; k < free; ++k) {
      coeffs(k + 3, i) = c(k);
      coeffs(2, i) -= c(k);
    }
  }
  return ModeShapeSet(std::move(coeffs));
}

void ValidateLocations(const std::vector<double>& heights) {
  if (heights.empty() || heights.front() != 1.0) {
    throw std::invalid_argument("the first location must be the top, z = 1");
  }
  for (std::size_t l = 0; l < heights.size(); ++l) {
    if (!(heights[l] >= 0.0 && heights[l] <= 1.0)) {
      throw std::invalid_argument("location heights must lie in [0, 1]");
    }
    if (l > 0 && !(heights[l] < heights[l - 1])) {
      throw std::invalid_argument("location heights must strictly decrease");
    }
  }
}

Eigen::MatrixXd BuildShapeMatrix(const ModeShapeSet& shapes,
                                 const std::vector<double>& heights) {
  Eigen::MatrixXd s(shapes.num_modes(), heights.size());
  for (int i = 0; i < shapes.num_modes(); ++i) {
    for (std::size_t l = 0; l < heights.size(); ++l) {
      s(i, l) = shapes.ShapeAt(i, heights[l]);
    }
  }
  return s;
}

Eigen::VectorXd ModalMass(const ModeShapeSet& shapes,
                          const std::vector<double>& density,
                          const std::vector<double>& node_grid,
                          double tower_height) {
  if (density.size() != node_grid.size() || node_grid.empty()) {
    throw std::invalid_argument("density profile does not match node grid");
  }
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(shapes.num_modes());
  double previous = 0.0;
  for (std::size_t l = 0; l < node_grid.size(); ++l) {
    const double dz = node_grid[l] - previous;
    if (!(dz > 0.0)) {
      throw std::invalid_argument("node grid must be strictly increasing");
    }
    for (int i = 0; i < shapes.num_modes(); ++i) {
      const double s = shapes.ShapeAt(i, node_grid[l]);
      mass(i) += density[l] * s * s * dz * tower_height;
    }
    previous = node_grid[l];
  }
  return mass;
}

void TowerParams::Validate() const {
  if (!(height > 0.0)) throw std::invalid_argument("tower height must be > 0");
  if (num_modes < 1 || num_modes > num_dofs) {
    throw std::invalid_argument("need 1 <= num_modes <= num_dofs");
  }
  if (static_cast<int>(frequencies.size()) < num_modes ||
      static_cast<int>(damping_ratios.size()) < num_modes) {
    throw std::invalid_argument("one frequency and damping ratio per mode");
  }
  ValidateLocations(locations);
  if (node_grid.empty() && !(total_mass > 0.0)) {
    throw std::invalid_argument("tower mass must be > 0");
  }
}

ModalSystem BuildModalSystem(const ModeShapeSet& shapes,
                             const std::vector<double>& locations,
                             const std::vector<double>& density,
                             const std::vector<double>& node_grid,
                             double tower_height,
                             const std::vector<double>& frequencies,
                             const std::vector<double>& damping_ratios) {
  const int n = shapes.num_modes();
  if (static_cast<int>(frequencies.size()) != n ||
      static_cast<int>(damping_ratios.size()) != n) {
    throw std::invalid_argument("one frequency and damping ratio per mode");
  }
  ModalSystem sys;
  sys.shapes = shapes;
  sys.locations = locations;
  sys.tower_height = tower_height;
  sys.node_grid = node_grid;
  sys.density = density;
  sys.frequencies = frequencies;
  sys.damping_ratios = damping_ratios;
  sys.mass = ModalMass(shapes, density, node_grid, tower_height);
  sys.stiffness.resize(n);
  sys.damping.resize(n);
  sys.input.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!(frequencies[i] > 0.0)) {
      throw std::invalid_argument("natural frequencies must be positive");
    }
    if (!(damping_ratios[i] >= 0.0 && damping_ratios[i] < 1.0)) {
      throw std::invalid_argument("damping ratios must lie in [0, 1)");
    }
    if (!(sys.mass(i) > 0.0)) {
      throw std::invalid_argument("modal mass of mode " +
                                  std::to_string(i + 1) + " is zero");
    }
    const double w = kTwoPi * frequencies[i];
    sys.stiffness(i) = sys.mass(i) * w * w;
    sys.damping(i) = 2.0 * damping_ratios[i] * sys.mass(i) * w;
    sys.input(i) = shapes.ShapeAt(i, 1.0) / sys.mass(i);
  }
  sys.shape_matrix = BuildShapeMatrix(shapes, locations);
  return sys;
}

ModalSystem BuildModalSystem(const TowerParams& tower, int num_modes) {
  tower.Validate();
  const int n = num_modes < 0 ? tower.num_modes : num_modes;
  if (n < 1 || n > tower.num_modes) {
    throw std::invalid_argument("requested more modes than configured");
  }
  ModeShapeSet shapes =
      tower.shape_coefficients.size() > 0
          ? ModeShapeSet(tower.shape_coefficients)
          : CantileverModeShapes(tower.num_dofs, tower.num_modes);
  shapes = shapes.Truncated(n);
  std::vector<double> grid = tower.node_grid;
  std::vector<double> density = tower.density;
  if (grid.empty()) {
    for (int l = 1; l <= tower.num_dofs; ++l) {
      grid.push_back(static_cast<double>(l) / tower.num_dofs);
    }
    density.assign(grid.size(), tower.total_mass / tower.height);
  }
  return BuildModalSystem(
      shapes, tower.locations, density, grid, tower.height,
      {tower.frequencies.begin(), tower.frequencies.begin() + n},
      {tower.damping_ratios.begin(), tower.damping_ratios.begin() + n});
}

Eigen::VectorXd ModalAcceleration(const ModalSystem& system,
                                  const ModalState& state, double thrust) {
  return system.input * thrust - ((system.damping.array() * state.v.array() +
                                   system.stiffness.array() * state.x.array()) /
                                  system.mass.array())
                                     .matrix();
}

ModalState ModalStep(const ModalSystem& system, const ModalState& state,
                     double thrust, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  auto deriv = [&](const ModalState& s) {
    return ModalState{s.v, ModalAcceleration(system, s, thrust)};
  };
  auto axpy = [](const ModalState& s, double h, const ModalState& d) {
    return ModalState{s.x + h * d.x, s.v + h * d.v};
  };
  const ModalState k1 = deriv(state);
  const ModalState k2 = deriv(axpy(state, 0.5 * dt, k1));
  const ModalState k3 = deriv(axpy(state, 0.5 * dt, k2));
  const ModalState k4 = deriv(axpy(state, dt, k3));
  return {state.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          state.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ProjectToPhysical(
    const ModalSystem& system, const ModalState& state) {
  return {system.shape_matrix.transpose() * state.x,
          system.shape_matrix.transpose() * state.v};
}

double ModalEnergy(const ModalSystem& system, const ModalState& state) {
  return 0.5 * (system.mass.array() * state.v.array().square() +
                system.stiffness.array() * state.x.array().square())
                   .sum();
}

double ThrustForce(double omega_g, double beta, double wind,
                   const CoeffSurface& ct, const TurbineParams& params) {
  if (!(wind > 0.0)) throw std::domain_error("wind speed must be positive");
  if (!(omega_g > 0.0)) throw std::domain_error("generator speed must be > 0");
  const double lambda =
      omega_g * params.rotor_diameter / (2.0 * params.gearbox_ratio * wind);
  return 0.5 * params.air_density * params.RotorArea() *
         ct.Lookup(lambda, beta) * wind * wind;
}

double TfamRate(double tower_height, double v_top, double a_top, double v_l,
                double a_l, double z_l, double d_l, double k_l) {
  return tower_height * (1.0 - z_l) *
         (d_l * (a_top - a_l) + k_l * (v_top - v_l));
}

TfamCoefficients DefaultTfamCoefficients(const ModalSystem& system,
                                         int location) {
  TfamCoefficients c;
  for (int i = 0; i < system.num_modes(); ++i) {
    const double s = system.shape_matrix(i, location);
    c.k += system.stiffness(i) * s * s;
    c.d += system.damping(i) * s * s;
  }
  return c;
}

Eigen::MatrixXd ReadModeShapes(std::istream& in) {
  std::vector<std::vector<double>> modes;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    for (double c; fields >> c;) row.push_back(c);
    if (!fields.eof()) throw ParseError("bad number in mode shape file");
    if (!row.empty()) modes.push_back(std::move(row));
  }
  if (modes.empty()) throw ParseError("mode shape file has no modes");
  const std::size_t dofs = modes.front().size();
  Eigen::MatrixXd coeffs(dofs, modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].size() != dofs) {
      throw ParseError("all modes need the same number of coefficients");
    }
    for (std::size_t k = 0; k < dofs; ++k) coeffs(k, i) = modes[i][k];
  }
  return coeffs;
}

void ReadDensityProfile(std::istream& in, std::vector<double>* node_grid,
                        std::vector<double>* density) {
  node_grid->clear();
  density->clear();
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line.rfind("z,", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double z = 0.0, rho = 0.0;
    if (!(fields >> z >> rho)) {
      throw ParseError("density profile row " + std::to_string(row) +
                       " is malformed");
    }
    node_grid->push_back(z);
    density->push_back(rho);
  }
  if (node_grid->empty()) throw ParseError("density profile is empty");
}

}  // namespace wt_empc
