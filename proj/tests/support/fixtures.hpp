// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <relann/gateway.hpp>
#include <relann/mock_server.hpp>

namespace relann::testing {

std::filesystem::path data_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Gateway settings for a mock server: in-memory cache unless `cache_dir`
// is given, millisecond backoff.
GatewayConfig mock_gateway_config(const mock::Server& server, const std::filesystem::path& cache_dir = {});

// A chat fixture answering `content` with explicit per-token logprobs.
mock::ChatFixture chat_fixture(std::vector<std::string> match, std::string content,
                               std::vector<std::pair<std::string, double>> tokens = {});

}  // namespace relann::testing
