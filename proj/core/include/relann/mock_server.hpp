// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// In-process HTTP server speaking the same chat-completions / embeddings
// wire shape as the real endpoints, answering from canned fixtures.
namespace relann::mock {

// A canned chat answer. The first fixture whose `match` substrings all
// occur in the request (system + user text) wins.
struct ChatFixture {
  std::vector<std::string> match;
  std::optional<std::string> model;
  std::string content;
  // Explicit token stream. When absent and logprobs are requested, the
  // content is split with `tokenize` and every token gets logprob 0 unless
  // `token_logprobs` names its trimmed surface.
  std::optional<std::vector<std::pair<std::string, double>>> tokens;
  std::map<std::string, double> token_logprobs;
  // Statuses returned, in order, by the first calls that match before the
  // fixture starts answering 200.
  std::vector<int> fail_statuses;
  // Behave like an endpoint without logprob support.
  bool omit_logprobs = false;
};

struct EmbeddingFixture {
  std::string text;
  std::vector<double> vector;
};

enum class Fallback {
  none,     // unmatched chat requests get HTTP 404
  overlap,  // deterministic lexical-overlap judge for every prompt family
};

struct Fixtures {
  std::vector<ChatFixture> chat;
  std::vector<EmbeddingFixture> embeddings;
  Fallback fallback = Fallback::none;
  std::size_t embedding_dim = 256;

  // Reads <dir>/chat.jsonl, <dir>/embeddings.jsonl and <dir>/mock.json
  // (each optional).
  static Fixtures load(const std::filesystem::path& dir);
};

// Hashed bag-of-words vector: lowercase alphanumeric words, FNV-1a bucket.
std::vector<double> bag_of_words_embedding(std::string_view text, std::size_t dim);

// Splits text into tokens the way BPE vocabularies tend to: a word keeps
// its leading space, punctuation and newlines stand alone.
std::vector<std::string> tokenize(std::string_view text);

struct ServerCounters {
  std::size_t chat_requests = 0;
  std::size_t embedding_requests = 0;
  std::size_t unmatched = 0;
};

class Server {
 public:
  // Binds immediately (port 0 picks a free port) and serves on a
  // background thread until destroyed or stopped.
  explicit Server(Fixtures fixtures, const std::string& host = "127.0.0.1", int port = 0);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const;
  // "http://host:port/v1"
  std::string base_url() const;
  ServerCounters counters() const;

  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relann::mock
