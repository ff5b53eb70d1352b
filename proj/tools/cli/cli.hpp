// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace relann::cli {

// Exit codes: 0 success, 1 runtime failure (logged as a structured
// "command_failed" record on stderr), 2 usage error.
int run_cli(int argc, char** argv);
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace relann::cli
