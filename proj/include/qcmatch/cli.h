// Copyright 2026 The qcmatch Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: gen, solve, run, oracle, verify, report.

#ifndef QCMATCH_CLI_H_
#define QCMATCH_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace qcmatch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name. Returns the process exit status.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace qcmatch

#endif  // QCMATCH_CLI_H_
