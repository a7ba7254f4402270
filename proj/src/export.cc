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

#include "wt_empc/export.h"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

struct Column {
  std::string name;
  bool numeric = true;
  std::function<std::string(const SimRecord&)> get;
  std::function<void(const std::string&, SimRecord*)> set;
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseNum(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("timeseries: bad number '" + s + "'");
}

Column Scalar(const std::string& name, double SimRecord::* member) {
  return {name, true, [member](const SimRecord& r) { return Num(r.*member); },
          [member](const std::string& s, SimRecord* r) {
            r->*member = ParseNum(s);
          }};
}

Column Element(const std::string& name, Eigen::VectorXd SimRecord::* member,
               int index) {
  return {
      name + "_" + std::to_string(index), true,
      [member, index](const SimRecord& r) { return Num((r.*member)(index)); },
      [member, index](const std::string& s, SimRecord* r) {
        (r->*member)(index) = ParseNum(s);
      }};
}

std::vector<Column> Schema(int nm, int nl) {
  std::vector<Column> c;
  c.push_back(Scalar("t", &SimRecord::t));
  c.push_back(Scalar("wind", &SimRecord::wind));
  c.push_back(Scalar("omega_g", &SimRecord::omega_g));
  c.push_back(Scalar("energy", &SimRecord::energy));
  for (int i = 0; i < nm; ++i) c.push_back(Element("x_m", &SimRecord::x_m, i));
  for (int i = 0; i < nm; ++i) c.push_back(Element("v_m", &SimRecord::v_m, i));
  for (int l = 0; l < nl; ++l) c.push_back(Element("x_p", &SimRecord::x_p, l));
  for (int l = 0; l < nl; ++l) c.push_back(Element("v_p", &SimRecord::v_p, l));
  c.push_back(Scalar("thrust", &SimRecord::thrust));
  c.push_back(Scalar("thrust_model", &SimRecord::thrust_model));
  c.push_back(Scalar("torque", &SimRecord::torque));
  c.push_back(Scalar("pitch", &SimRecord::pitch));
  c.push_back(Scalar("rotor_power_cmd", &SimRecord::rotor_power_cmd));
  c.push_back(Scalar("gen_power_cmd", &SimRecord::gen_power_cmd));
  c.push_back(Scalar("rotor_power", &SimRecord::rotor_power));
  c.push_back(Scalar("gen_power", &SimRecord::gen_power));
  for (int l = 0; l < nl; ++l) {
    c.push_back(Element("tfam_rate", &SimRecord::tfam_rate, l));
  }
  c.push_back(Scalar("slack", &SimRecord::slack));
  c.push_back({"status", false, [](const SimRecord& r) { return r.status; },
               [](const std::string& s, SimRecord* r) { r->status = s; }});
  c.push_back({"mode", false, [](const SimRecord& r) { return r.mode; },
               [](const std::string& s, SimRecord* r) { r->mode = s; }});
  c.push_back(Scalar("solve_time", &SimRecord::solve_time));
  c.push_back({"iterations", true,
               [](const SimRecord& r) { return std::to_string(r.iterations); },
               [](const std::string& s, SimRecord* r) {
                 r->iterations = static_cast<int>(ParseNum(s));
               }});
  c.push_back(Scalar("terminal_gap", &SimRecord::terminal_gap));
  c.push_back(Scalar("tail_distance", &SimRecord::tail_distance));
  c.push_back(
      Scalar("steady_state_residual", &SimRecord::steady_state_residual));
  c.push_back(Scalar("torque_roundtrip", &SimRecord::torque_roundtrip));
  c.push_back(Scalar("pitch_roundtrip", &SimRecord::pitch_roundtrip));
  c.push_back({"pitch_saturated", true,
               [](const SimRecord& r) {
                 return std::string(r.pitch_saturated ? "1" : "0");
               },
               [](const std::string& s, SimRecord* r) {
                 r->pitch_saturated = ParseNum(s) != 0.0;
               }});
  return c;
}

int CountPrefix(const std::vector<std::string>& header,
                const std::string& prefix) {
  int n = 0;
  while (std::find(header.begin(), header.end(),
                   prefix + "_" + std::to_string(n)) != header.end()) {
    ++n;
  }
  return n;
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  boost::algorithm::split(out, line, boost::algorithm::is_any_of(","));
  return out;
}

}  // namespace

std::vector<std::string> TimeseriesColumns(int num_modes, int num_locations) {
  std::vector<std::string> names;
  for (const auto& c : Schema(num_modes, num_locations))
    names.push_back(c.name);
  return names;
}

void WriteTimeseriesCsv(std::ostream& out, const SimLog& log) {
  const int nl = static_cast<int>(log.locations.size());
  const auto schema = Schema(log.num_modes, nl);
  for (std::size_t k = 0; k < schema.size(); ++k) {
    out << (k ? "," : "") << schema[k].name;
  }
  out << '\n';
  for (const auto& r : log.records) {
    for (std::size_t k = 0; k < schema.size(); ++k) {
      out << (k ? "," : "") << schema[k].get(r);
    }
    out << '\n';
  }
}

SimLog ReadTimeseriesCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("timeseries: missing header");
  boost::algorithm::trim_right(line);
  const auto header = SplitLine(line);
  SimLog log;
  log.num_modes = CountPrefix(header, "x_m");
  const int nl = CountPrefix(header, "x_p");
  log.locations.assign(nl, 0.0);
  const auto schema = Schema(log.num_modes, nl);
  if (header.size() != schema.size()) {
    throw ParseError("timeseries: header does not match the schema");
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (header[k] != schema[k].name) {
      throw ParseError("timeseries: unexpected column '" + header[k] + "'");
    }
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    boost::algorithm::trim_right(line);
    if (line.empty()) continue;
    const auto cells = SplitLine(line);
    if (cells.size() != schema.size()) {
      throw ParseError("timeseries: line " + std::to_string(line_no) +
                       " has the wrong number of cells");
    }
    SimRecord r;
    r.x_m = r.v_m = Eigen::VectorXd::Zero(log.num_modes);
    r.x_p = r.v_p = r.tfam_rate = Eigen::VectorXd::Zero(nl);
    for (std::size_t k = 0; k < schema.size(); ++k) schema[k].set(cells[k], &r);
    log.records.push_back(std::move(r));
  }
  if (log.records.size() >= 2) {
    log.sample_time = log.records[1].t - log.records[0].t;
  }
  log.completed = true;
  return log;
}

double RecordSignal(const SimRecord& record, const std::string& column) {
  const int nm = static_cast<int>(record.x_m.size());
  const int nl = static_cast<int>(record.x_p.size());
  for (const auto& c : Schema(nm, nl)) {
    if (c.name != column) continue;
    if (!c.numeric) break;
    return ParseNum(c.get(record));
  }
  throw std::invalid_argument("no numeric column '" + column + "'");
}

nlohmann::json MetricsToJson(const Metrics& m) {
  nlohmann::json j;
  j["energy_captured_J"] = m.energy_captured;
  j["mean_solve_time_s"] = m.mean_solve_time;
  j["max_solve_time_s"] = m.max_solve_time;
  j["hold_steps"] = m.hold_steps;
  j["no_terminal_steps"] = m.no_terminal_steps;
  j["rms_thrust_error_N"] = m.rms_thrust_error;
  j["max_steady_state_residual"] = m.max_steady_state_residual;
  j["max_torque_roundtrip_rel"] = m.max_torque_roundtrip;
  j["max_pitch_roundtrip_W"] = m.max_pitch_roundtrip;
  j["energy_balance_error_J"] = m.energy_balance_error;
  j["energy_throughput_J"] = m.energy_throughput;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::json plateaus = nlohmann::json::array();
  for (const auto& p : m.plateaus) {
    plateaus.push_back({{"wind_m_s", p.speed},
                        {"steady_gen_power_W", p.steady_gen_power},
                        {"steady_omega_g_rad_s", p.steady_omega_g},
                        {"rms_v_p_m_s", vec(p.rms_velocity)},
                        {"peak_v_p_m_s", vec(p.peak_velocity)},
                        {"rms_tfam_rate_Nm_s", vec(p.rms_tfam_rate)},
                        {"mean_tail_distance", p.mean_tail_distance},
                        {"max_terminal_gap", p.max_terminal_gap}});
  }
  j["plateaus"] = plateaus;
  return j;
}

void WriteOverlayCsv(std::ostream& out, const std::vector<LabeledLog>& runs,
                     const std::string& signal) {
  std::size_t rows = 0;
  const SimLog* longest = nullptr;
  out << "t,wind";
  for (const auto& run : runs) {
    out << ',' << run.label;
    if (run.log->records.size() >= rows) {
      rows = run.log->records.size();
      longest = run.log;
    }
  }
  out << '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    out << Num(longest->records[k].t) << ',' << Num(longest->records[k].wind);
    for (const auto& run : runs) {
      out << ',';
      if (k < run.log->records.size()) {
        out << Num(RecordSignal(run.log->records[k], signal));
      }
    }
    out << '\n';
  }
}

std::ofstream OpenForWrite(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void ExportRun(const std::string& dir, const SimLog& log,
               const Metrics& metrics) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  {
    auto out = OpenForWrite((base / "timeseries.csv").string());
    WriteTimeseriesCsv(out, log);
  }
  auto out = OpenForWrite((base / "metrics.json").string());
  nlohmann::json j = MetricsToJson(metrics);
  j["completed"] = log.completed;
  if (!log.diagnostic.empty()) j["diagnostic"] = log.diagnostic;
  out << j.dump(2) << '\n';
}

}  // namespace wt_empc
