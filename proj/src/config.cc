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

#include "wt_empc/config.h"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wt_empc/coeff_surface.h"
#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

using boost::property_tree::ptree;

std::string Where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

double ToDouble(const std::string& section, const std::string& key,
                const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(Where(section, key) + ": bad number '" + text + "'");
}

int ToInt(const std::string& section, const std::string& key,
          const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(Where(section, key) + ": bad integer '" + text + "'");
}

bool ToBool(const std::string& section, const std::string& key,
            const std::string& text) {
  const std::string t = boost::algorithm::to_lower_copy(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ParseError(Where(section, key) + ": bad boolean '" + text + "'");
}

std::vector<double> ToList(const std::string& section, const std::string& key,
                           const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (p.empty()) continue;
    out.push_back(ToDouble(section, key, p));
  }
  return out;
}

std::string Resolve(const std::string& base_dir, const std::string& file) {
  if (file.empty() || base_dir.empty()) return file;
  const std::filesystem::path p(file);
  if (p.is_absolute()) return file;
  return (std::filesystem::path(base_dir) / p).string();
}

std::ifstream OpenOrThrow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

void ParseTurbine(const ptree& sec, TurbineParams* t) {
  for (const auto& [key, node] : sec) {
    ApplyTurbineParam(key, ToDouble("turbine", key, node.data()), t);
  }
}

void ParseTower(const ptree& sec, const std::string& base_dir, TowerParams* t) {
  for (const auto& [key, node] : sec) {
    const std::string& v = node.data();
    if (key == "height") {
      t->height = ToDouble("tower", key, v);
    } else if (key == "total_mass") {
      t->total_mass = ToDouble("tower", key, v);
    } else if (key == "num_dofs") {
      t->num_dofs = ToInt("tower", key, v);
    } else if (key == "num_modes") {
      t->num_modes = ToInt("tower", key, v);
    } else if (key == "frequencies") {
      t->frequencies = ToList("tower", key, v);
    } else if (key == "damping_ratios") {
      t->damping_ratios = ToList("tower", key, v);
    } else if (key == "locations") {
      t->locations = ToList("tower", key, v);
    } else if (key == "mode_shapes_file") {
      auto in = OpenOrThrow(Resolve(base_dir, v));
      t->shape_coefficients = ReadModeShapes(in);
    } else if (key == "density_file") {
      auto in = OpenOrThrow(Resolve(base_dir, v));
      ReadDensityProfile(in, &t->node_grid, &t->density);
    } else {
      throw ParseError("unknown key " + Where("tower", key));
    }
  }
}

void ParseController(const ptree& sec, EmpcConfig* c) {
  for (const auto& [key, node] : sec) {
    const std::string& v = node.data();
    if (key == "horizon") {
      c->horizon = ToInt("controller", key, v);
    } else if (key == "sample_time") {
      c->sample_time = ToDouble("controller", key, v);
    } else if (key == "alpha1") {
      c->weights.alpha1 = ToDouble("controller", key, v);
    } else if (key == "alpha2") {
      c->weights.alpha2 = ToDouble("controller", key, v);
    } else if (key == "alpha3") {
      c->weights.alpha3 = ToDouble("controller", key, v);
    } else if (key == "alpha4") {
      c->weights.alpha4 = ToDouble("controller", key, v);
    } else if (key == "alpha5") {
      c->weights.alpha5 = ToDouble("controller", key, v);
    } else if (key == "location_weights") {
      c->location_weights = ToList("controller", key, v);
    } else if (key == "variant") {
      try {
        c->variant = ParseVariant(v);
      } catch (const std::invalid_argument& e) {
        throw ParseError(Where("controller", key) + ": " + e.what());
      }
    } else if (key == "terminal_constraint") {
      c->terminal_constraint = ToBool("controller", key, v);
    } else if (key == "refit_wind_change") {
      c->refit_wind_change = ToDouble("controller", key, v);
    } else if (key == "steady_state_wind_change") {
      c->steady_state_wind_change = ToDouble("controller", key, v);
    } else if (key == "num_torque_cuts") {
      c->num_torque_cuts = ToInt("controller", key, v);
    } else if (key == "qp_tolerance") {
      c->qp.tolerance = ToDouble("controller", key, v);
    } else if (key == "qp_max_iterations") {
      c->qp.max_iterations = ToInt("controller", key, v);
    } else if (key == "qp_interior_point") {
      c->qp.interior_point = ToBool("controller", key, v);
    } else {
      throw ParseError("unknown key " + Where("controller", key));
    }
  }
}

void ParseWind(const ptree& sec, const std::string& base_dir, WindConfig* w) {
  for (const auto& [key, node] : sec) {
    const std::string& v = node.data();
    if (key == "kind") {
      if (v == "staircase")
        w->kind = WindProfile::Kind::kStaircase;
      else if (v == "constant")
        w->kind = WindProfile::Kind::kConstant;
      else if (v == "file")
        w->kind = WindProfile::Kind::kFile;
      else
        throw ParseError(Where("wind", key) + ": unknown kind '" + v + "'");
    } else if (key == "start") {
      w->start = ToDouble("wind", key, v);
    } else if (key == "end") {
      w->end = ToDouble("wind", key, v);
    } else if (key == "step") {
      w->step = ToDouble("wind", key, v);
    } else if (key == "dwell") {
      w->dwell = ToDouble("wind", key, v);
    } else if (key == "speed") {
      w->speed = ToDouble("wind", key, v);
    } else if (key == "duration") {
      w->duration = ToDouble("wind", key, v);
    } else if (key == "file") {
      w->file = Resolve(base_dir, v);
    } else {
      throw ParseError("unknown key " + Where("wind", key));
    }
  }
}

void ParseSimulation(const ptree& sec, const std::string& base_dir,
                     SimulationConfig* s) {
  for (const auto& [key, node] : sec) {
    const std::string& v = node.data();
    if (key == "cut_in") {
      s->cut_in = ToDouble("simulation", key, v);
    } else if (key == "plant_substeps") {
      s->plant_substeps = ToInt("simulation", key, v);
    } else if (key == "settled_fraction") {
      s->settled_fraction = ToDouble("simulation", key, v);
    } else if (key == "transient_window") {
      s->transient_window = ToDouble("simulation", key, v);
    } else if (key == "cp_table") {
      s->cp_table = Resolve(base_dir, v);
    } else if (key == "ct_table") {
      s->ct_table = Resolve(base_dir, v);
    } else if (key == "pwl_segments") {
      s->pwl_segments = ToInt("simulation", key, v);
    } else {
      throw ParseError("unknown key " + Where("simulation", key));
    }
  }
}

std::string JoinList(const std::vector<double>& v) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  return out.str();
}

const char* KindName(WindProfile::Kind kind) {
  switch (kind) {
    case WindProfile::Kind::kStaircase:
      return "staircase";
    case WindProfile::Kind::kConstant:
      return "constant";
    case WindProfile::Kind::kFile:
      return "file";
  }
  return "staircase";
}

}  // namespace

WindProfile WindConfig::Build() const {
  switch (kind) {
    case WindProfile::Kind::kStaircase:
      return WindProfile::Staircase(start, end, step, dwell);
    case WindProfile::Kind::kConstant:
      return WindProfile::Constant(speed, duration);
    case WindProfile::Kind::kFile: {
      auto in = OpenOrThrow(file);
      return WindProfile::FromCsv(in);
    }
  }
  throw std::invalid_argument("unknown wind kind");
}

SimulationOptions SimulationConfig::Options() const {
  SimulationOptions o;
  o.cut_in = cut_in;
  o.plant_substeps = plant_substeps;
  return o;
}

MetricWindows SimulationConfig::Windows() const {
  MetricWindows w;
  w.settled_fraction = settled_fraction;
  w.transient = transient_window;
  return w;
}

void ScenarioConfig::Validate() const {
  turbine.Validate();
  tower.Validate();
  controller.Validate(static_cast<int>(tower.locations.size()));
  if (wind.kind == WindProfile::Kind::kStaircase &&
      (!(wind.dwell > 0.0) || !(wind.step > 0.0) || !(wind.start > 0.0) ||
       wind.end < wind.start)) {
    throw std::invalid_argument(
        "staircase wind needs 0 < start <= end, step > 0 and dwell > 0");
  }
  if (wind.kind == WindProfile::Kind::kConstant &&
      (!(wind.speed > 0.0) || !(wind.duration > 0.0))) {
    throw std::invalid_argument("constant wind needs speed > 0, duration > 0");
  }
  if (wind.kind == WindProfile::Kind::kFile && wind.file.empty()) {
    throw std::invalid_argument("file wind needs [wind] file");
  }
  if (simulation.plant_substeps < 1) {
    throw std::invalid_argument("plant_substeps must be >= 1");
  }
  if (!(simulation.settled_fraction > 0.0 &&
        simulation.settled_fraction <= 1.0)) {
    throw std::invalid_argument("settled_fraction must lie in (0, 1]");
  }
  if (!(simulation.transient_window > 0.0)) {
    throw std::invalid_argument("transient_window must be > 0");
  }
  if (simulation.pwl_segments < 1) {
    throw std::invalid_argument("pwl_segments must be >= 1");
  }
  if (simulation.cp_table.empty() != simulation.ct_table.empty()) {
    throw std::invalid_argument("cp_table and ct_table go together");
  }
}

ScenarioConfig ParseConfig(std::istream& in, const std::string& base_dir) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ScenarioConfig c;
  for (const auto& [name, sec] : tree) {
    if (!sec.data().empty() && sec.empty()) {
      throw ParseError("config: key '" + name + "' outside any section");
    }
    if (name == "turbine")
      ParseTurbine(sec, &c.turbine);
    else if (name == "tower")
      ParseTower(sec, base_dir, &c.tower);
    else if (name == "controller")
      ParseController(sec, &c.controller);
    else if (name == "wind")
      ParseWind(sec, base_dir, &c.wind);
    else if (name == "simulation")
      ParseSimulation(sec, base_dir, &c.simulation);
    else
      throw ParseError("config: unknown section [" + name + "]");
  }
  c.Validate();
  return c;
}

ScenarioConfig LoadConfig(const std::string& path) {
  auto in = OpenOrThrow(path);
  return ParseConfig(in, std::filesystem::path(path).parent_path().string());
}

void WriteConfig(std::ostream& out, const ScenarioConfig& c) {
  out << std::setprecision(17);
  out << "[turbine]\n";
  WriteTurbineParams(out, c.turbine);
  out << "\n[tower]\n"
      << "height = " << c.tower.height << "\n"
      << "total_mass = " << c.tower.total_mass << "\n"
      << "num_dofs = " << c.tower.num_dofs << "\n"
      << "num_modes = " << c.tower.num_modes << "\n"
      << "frequencies = " << JoinList(c.tower.frequencies) << "\n"
      << "damping_ratios = " << JoinList(c.tower.damping_ratios) << "\n"
      << "locations = " << JoinList(c.tower.locations) << "\n";
  const EmpcConfig& k = c.controller;
  out << "\n[controller]\n"
      << "horizon = " << k.horizon << "\n"
      << "sample_time = " << k.sample_time << "\n"
      << "alpha1 = " << k.weights.alpha1 << "\n"
      << "alpha2 = " << k.weights.alpha2 << "\n"
      << "alpha3 = " << k.weights.alpha3 << "\n"
      << "alpha4 = " << k.weights.alpha4 << "\n"
      << "alpha5 = " << k.weights.alpha5 << "\n"
      << "location_weights = " << JoinList(k.location_weights) << "\n"
      << "variant = " << ToString(k.variant) << "\n"
      << "terminal_constraint = " << (k.terminal_constraint ? "true" : "false")
      << "\n"
      << "refit_wind_change = " << k.refit_wind_change << "\n"
      << "steady_state_wind_change = " << k.steady_state_wind_change << "\n"
      << "num_torque_cuts = " << k.num_torque_cuts << "\n"
      << "qp_tolerance = " << k.qp.tolerance << "\n"
      << "qp_max_iterations = " << k.qp.max_iterations << "\n"
      << "qp_interior_point = " << (k.qp.interior_point ? "true" : "false")
      << "\n";
  const WindConfig& w = c.wind;
  out << "\n[wind]\n"
      << "kind = " << KindName(w.kind) << "\n"
      << "start = " << w.start << "\n"
      << "end = " << w.end << "\n"
      << "step = " << w.step << "\n"
      << "dwell = " << w.dwell << "\n"
      << "speed = " << w.speed << "\n"
      << "duration = " << w.duration << "\n";
  if (!w.file.empty()) out << "file = " << w.file << "\n";
  const SimulationConfig& s = c.simulation;
  out << "\n[simulation]\n"
      << "cut_in = " << s.cut_in << "\n"
      << "plant_substeps = " << s.plant_substeps << "\n"
      << "settled_fraction = " << s.settled_fraction << "\n"
      << "transient_window = " << s.transient_window << "\n"
      << "pwl_segments = " << s.pwl_segments << "\n";
  if (!s.cp_table.empty()) {
    out << "cp_table = " << s.cp_table << "\n"
        << "ct_table = " << s.ct_table << "\n";
  }
}

SimulationSetup MakeSetup(const ScenarioConfig& config) {
  config.Validate();
  SimulationSetup setup;
  setup.turbine = config.turbine;
  setup.tower = config.tower;
  setup.controller = config.controller;
  std::shared_ptr<const CoeffSurface> cp, ct;
  if (config.simulation.cp_table.empty()) {
    cp = std::make_shared<const CoeffSurface>(
        MakeAnalyticPowerSurface(DefaultLambdaGrid(), DefaultBetaGrid()));
    ct = std::make_shared<const CoeffSurface>(MakeMomentumThrustSurface(*cp));
  } else {
    cp = std::make_shared<const CoeffSurface>(
        LoadCoeffSurfaceCsv(config.simulation.cp_table, CoeffKind::kPower));
    ct = std::make_shared<const CoeffSurface>(
        LoadCoeffSurfaceCsv(config.simulation.ct_table, CoeffKind::kThrust));
  }
  setup.tables = BuildAeroTables(std::move(cp), std::move(ct), config.turbine,
                                 config.simulation.pwl_segments);
  return setup;
}

}  // namespace wt_empc
