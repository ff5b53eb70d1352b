// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <relann/mock_server.hpp>

namespace relann::testing {

struct CliResult {
  int code = 0;
  std::string out;  // captured stdout
};

// Runs the CLI in-process with stdout captured. `args` excludes the
// program name.
CliResult run_cli_captured(const std::vector<std::string>& args);

struct PipelineOutput {
  std::string annotations;  // annotations.jsonl bytes
  std::string report;       // report.json bytes
  int code = 0;             // first non-zero exit code, else 0
};

// ingest -> rank -> sample -> define -> annotate -> evaluate over the e2e
// fixture corpus, with `work` as the scratch directory and the given
// annotate parallelism.
PipelineOutput run_e2e_pipeline(const mock::Server& server, const std::filesystem::path& work,
                                std::size_t parallelism);

}  // namespace relann::testing
