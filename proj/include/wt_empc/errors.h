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

#ifndef WT_EMPC_ERRORS_H_
#define WT_EMPC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace wt_empc {

// Rotor speed reached zero or below during plant integration.
class StallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested rotor power exceeds what the wind can deliver at (v_w, K).
class InfeasibleTargetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A construction step could not honor one of its guarantees (e.g. a PWL
// envelope that fails its underestimation check, or a rank-deficient fit).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wt_empc

#endif  // WT_EMPC_ERRORS_H_
