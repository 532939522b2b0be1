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

#include <iosfwd>

namespace mimo_doa {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Parses `mimo_doa <verb> [flags]`, loads and overrides the configuration and runs
/// the verb. Diagnostics go to err as a single line.
int parse_and_dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace mimo_doa
