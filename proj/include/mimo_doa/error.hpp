// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace mimo_doa {

/// Violated precondition on an input value (bad angle, shape mismatch, infeasible scene, ...).
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure during network training (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, written, or has an unexpected layout.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string &message) {
    if (!condition) {
        throw DomainError(message);
    }
}

} // namespace mimo_doa
