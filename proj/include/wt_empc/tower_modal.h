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

// Fore-aft tower vibration in modal coordinates.

#ifndef WT_EMPC_TOWER_MODAL_H_
#define WT_EMPC_TOWER_MODAL_H_

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/turbine_params.h"

namespace wt_empc {

// Polynomial mode shapes over normalized height z in [0, 1]. Column i holds
// the ascending-degree coefficients of mode i.
class ModeShapeSet {
 public:
  // Checks that every mode is 0 at the base and 1 at the tip (1e-9) unless
  // `check_normalization` is false.
  explicit ModeShapeSet(Eigen::MatrixXd coefficients,
                        bool check_normalization = true);

  // Horner evaluation of mode `mode` at z. Throws std::domain_error for z
  // outside [0, 1].
  double ShapeAt(int mode, double z) const;

  // The first `num_modes` modes.
  ModeShapeSet Truncated(int num_modes) const;

  int num_dofs() const { return static_cast<int>(coefficients_.rows()); }
  int num_modes() const { return static_cast<int>(coefficients_.cols()); }
  const Eigen::MatrixXd& coefficients() const { return coefficients_; }

 private:
  Eigen::MatrixXd coefficients_;
  bool normalized_;
};

// Euler-Bernoulli uniform cantilever shapes fitted by least squares to
// polynomials of degree num_dofs-1 with zero value and slope at the base and
// unit value at the tip.
ModeShapeSet CantileverModeShapes(int num_dofs, int num_modes);

// Validates normalized measurement heights: z_1 = 1, strictly decreasing,
// all in [0, 1]. Throws std::invalid_argument otherwise.
void ValidateLocations(const std::vector<double>& heights);

// S(i, l) = shape of mode i at heights[l].
Eigen::MatrixXd BuildShapeMatrix(const ModeShapeSet& shapes,
                                 const std::vector<double>& heights);

// m_i = sum_l rho_l s_i(z_l)^2 (z_l - z_{l-1}) H_t over the node grid, with
// z_0 = 0. Throws std::invalid_argument on a non-increasing grid.
Eigen::VectorXd ModalMass(const ModeShapeSet& shapes,
                          const std::vector<double>& density,
                          const std::vector<double>& node_grid,
                          double tower_height);

struct TowerParams {
  double height = 87.6;          // m
  double total_mass = 347460.0;  // kg, used for the uniform default profile
  int num_dofs = 6;
  int num_modes = 2;
  std::vector<double> frequencies = {0.3240, 2.9003};  // Hz
  std::vector<double> damping_ratios = {0.01, 0.01};
  // Measurement heights including the base; weights are per location.
  std::vector<double> locations = {1.0, 0.72, 0.0};
  // Optional overrides; empty means uniform density on z_l = l/num_dofs and
  // cantilever shapes.
  std::vector<double> node_grid;
  std::vector<double> density;
  Eigen::MatrixXd shape_coefficients;

  void Validate() const;
};

struct ModalSystem {
  ModeShapeSet shapes{Eigen::MatrixXd::Zero(2, 1), false};
  std::vector<double> locations;
  Eigen::VectorXd mass;          // kg
  Eigen::VectorXd stiffness;     // N/m
  Eigen::VectorXd damping;       // N s/m
  Eigen::VectorXd input;         // 1/kg
  Eigen::MatrixXd shape_matrix;  // N_m x N_l
  double tower_height = 0.0;
  std::vector<double> node_grid;
  std::vector<double> density;  // kg/m per node
  std::vector<double> frequencies;
  std::vector<double> damping_ratios;

  int num_modes() const { return static_cast<int>(mass.size()); }
  int num_locations() const { return static_cast<int>(locations.size()); }
};

// Stiffness and damping come from K_i = m_i (2 pi f_i)^2 and
// D_i = 2 zeta_i m_i (2 pi f_i). The force acts at the top, so B_i is the
// tip shape value over m_i.
ModalSystem BuildModalSystem(const ModeShapeSet& shapes,
                             const std::vector<double>& locations,
                             const std::vector<double>& density,
                             const std::vector<double>& node_grid,
                             double tower_height,
                             const std::vector<double>& frequencies,
                             const std::vector<double>& damping_ratios);

// Builds from tower parameters, keeping the first `num_modes` modes (-1 for
// all configured modes).
ModalSystem BuildModalSystem(const TowerParams& tower, int num_modes = -1);

struct ModalState {
  Eigen::VectorXd x;  // m
  Eigen::VectorXd v;  // m/s

  static ModalState Zero(int num_modes) {
    return {Eigen::VectorXd::Zero(num_modes), Eigen::VectorXd::Zero(num_modes)};
  }
};

// Modal acceleration from the equation of motion.
Eigen::VectorXd ModalAcceleration(const ModalSystem& system,
                                  const ModalState& state, double thrust);

// One RK4 step with the thrust held.
ModalState ModalStep(const ModalSystem& system, const ModalState& state,
                     double thrust, double dt);

// (x_p, v_p) = (S^T x_m, S^T v_m).
std::pair<Eigen::VectorXd, Eigen::VectorXd> ProjectToPhysical(
    const ModalSystem& system, const ModalState& state);

double ModalEnergy(const ModalSystem& system, const ModalState& state);

// F_T = rho A C_t(lambda, beta) v^2 / 2.
double ThrustForce(double omega_g, double beta, double wind,
                   const CoeffSurface& ct, const TurbineParams& params);

// Rate of the fore-aft moment at height z_l, lever arm H_t (1 - z_l).
double TfamRate(double tower_height, double v_top, double a_top, double v_l,
                double a_l, double z_l, double d_l, double k_l);

struct TfamCoefficients {
  double d = 0.0;  // N s/m
  double k = 0.0;  // N/m
};

// Default per-location coefficients: k_l = sum_i K_i s_il^2, likewise d_l.
TfamCoefficients DefaultTfamCoefficients(const ModalSystem& system,
                                         int location);

// Mode-shape file: one mode per line, ascending coefficients separated by
// whitespace. Returns N_d x N_m.
Eigen::MatrixXd ReadModeShapes(std::istream& in);
// `z,rho_per_length` CSV; fills node grid and density.
void ReadDensityProfile(std::istream& in, std::vector<double>* node_grid,
                        std::vector<double>* density);

}  // namespace wt_empc

#endif  // WT_EMPC_TOWER_MODAL_H_
