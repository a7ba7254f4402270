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

#include "wt_empc/pwl_envelope.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wt_empc/aero_drivetrain.h"
#include "wt_empc/errors.h"
#include "wt_empc/kinetic_energy.h"

namespace wt_empc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Indices of the upper concave hull of (k_i, f_i), k strictly increasing.
std::vector<int> UpperHull(const std::vector<double>& k,
                           const std::vector<double>& f) {
  std::vector<int> hull;
  for (int i = 0; i < static_cast<int>(k.size()); ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2];
      const int b = hull.back();
      const double cross =
          (k[b] - k[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (k[i] - k[a]);
      if (cross < 0.0) break;
      hull.pop_back();
    }
    hull.push_back(i);
  }
  return hull;
}

// Chord through samples u and w, lowered to touch the lowest sample between
// them. `gap` is the worst distance from the lowered chord to the samples.
struct Chord {
  AffineCut cut;
  double gap = 0.0;
};

Chord MakeChord(const std::vector<double>& k, const std::vector<double>& f,
                int u, int w) {
  Chord c;
  c.cut.slope = (f[w] - f[u]) / (k[w] - k[u]);
  c.cut.intercept = f[u] - c.cut.slope * k[u];
  double above = 0.0;
  double below = 0.0;
  for (int s = u; s <= w; ++s) {
    const double d = f[s] - c.cut(k[s]);
    above = std::max(above, d);
    below = std::max(below, -d);
  }
  c.cut.intercept -= below;
  c.gap = above + below;
  return c;
}

PwlEnvelope BuildEnvelope(const std::vector<double>& wind_grid,
                          const std::vector<double>& k_grid, int num_segments,
                          int exponent, auto&& exact) {
  std::vector<std::vector<AffineCut>> cuts;
  std::vector<std::vector<double>> exact_values;
  for (double v : wind_grid) {
    const double scale = std::pow(v, exponent);
    std::vector<double> f(k_grid.size());
    std::vector<double> values(k_grid.size());
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
      values[i] = exact(v, k_grid[i]);
      f[i] = values[i] / scale;
    }
    cuts.push_back(FitConcaveUnderestimator(k_grid, f, num_segments));
    exact_values.push_back(std::move(values));
  }
  PwlEnvelope env(wind_grid, std::move(cuts), exponent);
  for (std::size_t j = 0; j < wind_grid.size(); ++j) {
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
      const double approx = env.Eval(wind_grid[j], k_grid[i]);
      if (!(approx <= exact_values[j][i])) {
        std::ostringstream msg;
        msg << "envelope exceeds its target at v=" << wind_grid[j]
            << " K=" << k_grid[i] << " (" << approx << " > "
            << exact_values[j][i] << ")";
        throw ConstructionError(msg.str());
      }
    }
  }
  return env;
}

void CheckGridSpec(const PwlGridSpec& grid) {
  if (grid.num_segments < 1) {
    throw std::invalid_argument("need at least one segment");
  }
  if (grid.wind_grid.empty() || grid.k_grid.empty()) {
    throw std::invalid_argument("envelope grids must be non-empty");
  }
  for (double v : grid.wind_grid) {
    if (!(v > 0.0)) throw std::invalid_argument("wind grid must be positive");
  }
}

}  // namespace

double MinOfCuts(const std::vector<AffineCut>& cuts, double k) {
  double m = kInf;
  for (const auto& c : cuts) m = std::min(m, c(k));
  return m;
}

std::vector<AffineCut> FitConcaveUnderestimator(const std::vector<double>& k,
                                                const std::vector<double>& f,
                                                int num_segments) {
  if (k.size() != f.size() || k.empty()) {
    throw std::invalid_argument("sample vectors must match and be non-empty");
  }
  if (num_segments < 1) throw std::invalid_argument("need >= 1 segment");
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (!(k[i] > k[i - 1])) {
      throw std::invalid_argument("sample abscissae must strictly increase");
    }
  }
  double f_scale = 1.0;
  for (double v : f) f_scale = std::max(f_scale, std::abs(v));
  // Absorbs rounding between the construction and later evaluation.
  const double guard = 1e-12 * f_scale;

  std::vector<AffineCut> cuts;
  if (k.size() == 1) {
    cuts.push_back({0.0, f[0] - guard});
  } else {
    const std::vector<int> hull = UpperHull(k, f);
    const int h = static_cast<int>(hull.size());
    const int segs = std::min(num_segments, h - 1);
    // best[c][w]: least worst-gap using c chords from hull[0] to hull[w].
    std::vector<std::vector<double>> best(segs + 1,
                                          std::vector<double>(h, kInf));
    std::vector<std::vector<int>> from(segs + 1, std::vector<int>(h, -1));
    std::vector<std::vector<double>> gap(h, std::vector<double>(h, kInf));
    for (int u = 0; u < h; ++u) {
      for (int w = u + 1; w < h; ++w) {
        gap[u][w] = MakeChord(k, f, hull[u], hull[w]).gap;
      }
    }
    best[0][0] = 0.0;
    for (int c = 1; c <= segs; ++c) {
      for (int w = c; w < h; ++w) {
        for (int u = c - 1; u < w; ++u) {
          if (best[c - 1][u] == kInf) continue;
          const double cost = std::max(best[c - 1][u], gap[u][w]);
          if (cost < best[c][w]) {
            best[c][w] = cost;
            from[c][w] = u;
          }
        }
      }
    }
    int c_best = 1;
    for (int c = 1; c <= segs; ++c) {
      if (best[c][h - 1] < best[c_best][h - 1]) c_best = c;
    }
    for (int c = c_best, w = h - 1; c > 0; w = from[c][w], --c) {
      AffineCut cut = MakeChord(k, f, hull[from[c][w]], hull[w]).cut;
      cut.intercept -= guard;
      cuts.push_back(cut);
    }
    std::reverse(cuts.begin(), cuts.end());
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(MinOfCuts(cuts, k[i]) <= f[i])) {
      throw ConstructionError("under-envelope exceeds a sample");
    }
  }
  return cuts;
}

PwlEnvelope::PwlEnvelope(std::vector<double> wind_grid,
                         std::vector<std::vector<AffineCut>> cuts,
                         int wind_exponent)
    : wind_grid_(std::move(wind_grid)),
      cuts_(std::move(cuts)),
      wind_exponent_(wind_exponent) {
  if (wind_grid_.empty() || wind_grid_.size() != cuts_.size()) {
    throw std::invalid_argument("one cut family per wind grid point");
  }
  for (std::size_t j = 0; j < wind_grid_.size(); ++j) {
    if (cuts_[j].empty()) throw std::invalid_argument("empty cut family");
    if (j > 0 && !(wind_grid_[j] > wind_grid_[j - 1])) {
      throw std::invalid_argument("wind grid must strictly increase");
    }
  }
}

std::pair<int, double> PwlEnvelope::Bracket(double wind) const {
  const int n = static_cast<int>(wind_grid_.size());
  if (n == 1 || wind <= wind_grid_.front()) return {0, 0.0};
  if (wind >= wind_grid_.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(wind_grid_.begin(), wind_grid_.end(), wind);
  const int j = static_cast<int>(it - wind_grid_.begin()) - 1;
  return {j, (wind - wind_grid_[j]) / (wind_grid_[j + 1] - wind_grid_[j])};
}

double PwlEnvelope::EvalAtGrid(int j, double energy) const {
  return MinOfCuts(cuts_[j], energy) * std::pow(wind_grid_[j], wind_exponent_);
}

double PwlEnvelope::Eval(double wind, double energy) const {
  const auto [j, theta] = Bracket(wind);
  if (theta == 0.0) return EvalAtGrid(j, energy);
  if (theta == 1.0) return EvalAtGrid(j + 1, energy);
  return (1.0 - theta) * EvalAtGrid(j, energy) +
         theta * EvalAtGrid(j + 1, energy);
}

std::vector<AffineCut> PwlEnvelope::CombinedCuts(double wind) const {
  const auto [j, theta] = Bracket(wind);
  auto scaled = [&](int idx, double w) {
    std::vector<AffineCut> out;
    const double s = w * std::pow(wind_grid_[idx], wind_exponent_);
    for (const auto& c : cuts_[idx])
      out.push_back({s * c.slope, s * c.intercept});
    return out;
  };
  if (theta == 0.0) return scaled(j, 1.0);
  if (theta == 1.0) return scaled(j + 1, 1.0);
  const auto lo = scaled(j, 1.0 - theta);
  const auto hi = scaled(j + 1, theta);
  std::vector<AffineCut> out;
  out.reserve(lo.size() * hi.size());
  for (const auto& a : lo) {
    for (const auto& b : hi) {
      out.push_back({a.slope + b.slope, a.intercept + b.intercept});
    }
  }
  return out;
}

PwlGridSpec DefaultPwlGrid(const TurbineParams& params) {
  PwlGridSpec grid;
  for (int v = 3; v <= 25; ++v) grid.wind_grid.push_back(v);
  const double j = params.EquivalentInertia();
  const double k_lo = KineticEnergy(params.omega_g_min, j);
  const double k_hi = KineticEnergy(params.omega_g_max, j);
  constexpr int kPoints = 200;
  for (int i = 0; i < kPoints; ++i) {
    grid.k_grid.push_back(k_lo + (k_hi - k_lo) * i / (kPoints - 1));
  }
  return grid;
}

PwlEnvelope BuildPwlAvailablePower(const CoeffSurface& cp,
                                   const TurbineParams& params,
                                   const PwlGridSpec& grid) {
  CheckGridSpec(grid);
  return BuildEnvelope(grid.wind_grid, grid.k_grid, grid.num_segments, 3,
                       [&](double v, double k) {
                         return AvailablePower(v, k, cp, params).value;
                       });
}

PwlEnvelope BuildPwlMaxThrust(const CoeffSurface& ct,
                              const TurbineParams& params,
                              const PwlGridSpec& grid) {
  CheckGridSpec(grid);
  return BuildEnvelope(
      grid.wind_grid, grid.k_grid, grid.num_segments, 2,
      [&](double v, double k) { return MaxThrust(v, k, ct, params).value; });
}

std::vector<AffineCut> TorqueLimitCuts(const TurbineParams& params, double k_lo,
                                       double k_hi, int num_cuts) {
  if (num_cuts < 1 || !(k_lo > 0.0) || !(k_hi > k_lo)) {
    throw std::invalid_argument("bad torque cut range");
  }
  const double c = params.generator_efficiency * params.torque_g_max *
                   std::sqrt(2.0 / params.EquivalentInertia());
  auto g = [c](double k) { return c * std::sqrt(k); };
  std::vector<AffineCut> cuts;
  for (int i = 0; i < num_cuts; ++i) {
    const double l = k_lo + (k_hi - k_lo) * i / num_cuts;
    const double r = k_lo + (k_hi - k_lo) * (i + 1) / num_cuts;
    const double m = 0.5 * (l + r);
    AffineCut t;
    t.slope = c / (2.0 * std::sqrt(m));
    t.intercept = g(m) - t.slope * m;
    // tangent - sqrt is convex, so its worst gap sits at an end point.
    const double gap = std::max(t(l) - g(l), t(r) - g(r));
    t.intercept -= gap * (1.0 + 1e-12) + 1e-12 * g(r);
    cuts.push_back(t);
  }
  return cuts;
}

void WritePwlCsv(std::ostream& out, const PwlEnvelope& envelope) {
  out << "v_w,i,a_i,b_i\n" << std::setprecision(17);
  for (std::size_t j = 0; j < envelope.wind_grid().size(); ++j) {
    const auto& cuts = envelope.cuts(static_cast<int>(j));
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      out << envelope.wind_grid()[j] << ',' << i + 1 << ',' << cuts[i].slope
          << ',' << cuts[i].intercept << '\n';
    }
  }
}

PwlEnvelope ReadPwlCsv(std::istream& in, int wind_exponent) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty envelope file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "v_w,i,a_i,b_i") {
    throw ParseError("envelope file header must be 'v_w,i,a_i,b_i'");
  }
  std::vector<double> winds;
  std::vector<std::vector<AffineCut>> cuts;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double v = 0.0, a = 0.0, b = 0.0;
    int i = 0;
    if (!(fields >> v >> i >> a >> b)) {
      throw ParseError("envelope row " + std::to_string(row) + " is malformed");
    }
    if (winds.empty() || winds.back() != v) {
      winds.push_back(v);
      cuts.emplace_back();
    }
    if (i != static_cast<int>(cuts.back().size()) + 1) {
      throw ParseError("envelope segments out of order at row " +
                       std::to_string(row));
    }
    cuts.back().push_back({a, b});
  }
  try {
    return PwlEnvelope(std::move(winds), std::move(cuts), wind_exponent);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace wt_empc
