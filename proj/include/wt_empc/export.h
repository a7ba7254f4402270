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

// File output of simulation logs and metrics: a time-series CSV with a
// schema fixed by the mode and location counts, a JSON metrics report and
// overlay CSVs that put one signal of several runs side by side.

#ifndef WT_EMPC_EXPORT_H_
#define WT_EMPC_EXPORT_H_

#include <fstream>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "wt_empc/simulation.h"

namespace wt_empc {

// Column names in file order.
std::vector<std::string> TimeseriesColumns(int num_modes, int num_locations);

// Numbers are written with 17 significant digits, so a read-back is exact.
void WriteTimeseriesCsv(std::ostream& out, const SimLog& log);
// Parses what WriteTimeseriesCsv wrote; the mode and location counts come
// from the header. Throws ParseError.
SimLog ReadTimeseriesCsv(std::istream& in);

// Value of a numeric column of the schema for one record. Throws
// std::invalid_argument for unknown or non-numeric names.
double RecordSignal(const SimRecord& record, const std::string& column);

nlohmann::json MetricsToJson(const Metrics& metrics);

struct LabeledLog {
  std::string label;
  const SimLog* log = nullptr;
};

// Columns t, wind, then `signal` of every run under its label. Runs must
// share the time grid; shorter runs leave trailing cells empty.
void WriteOverlayCsv(std::ostream& out, const std::vector<LabeledLog>& runs,
                     const std::string& signal);

// Writes timeseries.csv and metrics.json into `dir`, creating it. Throws
// std::runtime_error if a file cannot be written.
void ExportRun(const std::string& dir, const SimLog& log,
               const Metrics& metrics);

// Opens `path` for writing or throws std::runtime_error.
std::ofstream OpenForWrite(const std::string& path);

}  // namespace wt_empc

#endif  // WT_EMPC_EXPORT_H_
