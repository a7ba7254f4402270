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

// Plain-text serialization of a QuadraticProgram and, optionally, its
// primal solution, for debugging and regression fixtures.

#ifndef WT_EMPC_QP_DUMP_H_
#define WT_EMPC_QP_DUMP_H_

#include <Eigen/Core>
#include <iosfwd>
#include <optional>

#include "wt_empc/qp_solver.h"

namespace wt_empc {

struct QpDump {
  QuadraticProgram qp;
  std::optional<Eigen::VectorXd> solution;
};

void WriteQpDump(std::ostream& out, const QuadraticProgram& qp,
                 const Eigen::VectorXd* solution = nullptr);

// Throws ParseError on malformed input.
QpDump ReadQpDump(std::istream& in);

}  // namespace wt_empc

#endif  // WT_EMPC_QP_DUMP_H_
