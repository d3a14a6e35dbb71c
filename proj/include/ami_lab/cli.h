/*
 * Copyright 2026 The AMI Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// The ami_lab command line: game, certify, dpsgd, ldp-bench, export-weights
// and synth. Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#ifndef AMI_LAB_CLI_H_
#define AMI_LAB_CLI_H_

#include <ostream>

namespace ami_lab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace ami_lab

#endif  // AMI_LAB_CLI_H_
