// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace relann::testing {

std::filesystem::path data_dir() { return RELANN_TEST_DATA_DIR; }

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const auto name = "relann-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                    std::to_string(rd() % 100000);
  path_ = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

GatewayConfig mock_gateway_config(const mock::Server& server, const std::filesystem::path& cache_dir) {
  GatewayConfig c;
  c.base_url = server.base_url();
  c.cache_dir = cache_dir;
  c.backoff_initial = std::chrono::milliseconds(1);
  c.backoff_max = std::chrono::milliseconds(4);
  c.timeout = std::chrono::seconds(10);
  return c;
}

mock::ChatFixture chat_fixture(std::vector<std::string> match, std::string content,
                               std::vector<std::pair<std::string, double>> tokens) {
  mock::ChatFixture f;
  f.match = std::move(match);
  f.content = std::move(content);
  if (!tokens.empty()) f.tokens = std::move(tokens);
  return f;
}

}  // namespace relann::testing
