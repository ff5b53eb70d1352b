// SPDX-License-Identifier: Apache-2.0
// Serves canned chat and embedding responses for offline runs and tests.
#include <iostream>

#include <CLI11.hpp>

#include <relann/mock_server.hpp>

int main(int argc, char** argv) {
  CLI::App app("Mock OpenAI-compatible endpoint backed by fixture files", "relann-mock-server");
  std::string fixtures;
  std::string host = "127.0.0.1";
  int port = 0;
  app.add_option("--fixtures", fixtures, "Directory with chat.jsonl, embeddings.jsonl, mock.json")->required();
  app.add_option("--host", host, "Bind address")->capture_default_str();
  app.add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    relann::mock::Server server(relann::mock::Fixtures::load(fixtures), host, port);
    std::cout << server.base_url() << std::endl;
    server.wait();  // runs until the process is signalled
  } catch (const std::exception& e) {
    std::cerr << "relann-mock-server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
