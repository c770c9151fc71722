// Copyright 2026 The mcwc Authors. All Rights Reserved.
//
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

#ifndef MCWC_TOOLS_CLI_HPP_
#define MCWC_TOOLS_CLI_HPP_

namespace mcwc::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Parses argv, runs one subcommand and maps failures to exit codes.
int Run(int argc, char** argv);

}  // namespace mcwc::cli

#endif  // MCWC_TOOLS_CLI_HPP_
