// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace relann {

struct ChatRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  // Pinned to 0 by the gateway; a higher value is logged and ignored.
  double temperature = 0.0;
  int max_output_tokens = 512;
  bool want_logprobs = false;
  // Alternatives per position; only meaningful with want_logprobs.
  int top_logprobs = 0;
};

struct TokenLogprob {
  std::string surface;
  double logprob = 0.0;  // <= 0
  std::vector<std::pair<std::string, double>> alternatives;
};

struct ChatResponse {
  std::string text;
  // Present iff logprobs were requested and the endpoint supplied them.
  std::vector<TokenLogprob> tokens;
  std::string model;
  bool cached = false;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct EmbeddingResponse {
  // Aligned index-wise with the input texts; all share one dimension.
  std::vector<std::vector<double>> vectors;

  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }
};

struct GatewayConfig {
  // OpenAI-style base URL, e.g. "https://api.openai.com/v1".
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string api_key;
  std::string embedding_model = "text-embedding-3-small";
  // Empty keeps the cache in memory for the lifetime of the gateway.
  std::filesystem::path cache_dir;
  bool cache_enabled = true;
  std::size_t max_in_flight = 8;
  int max_attempts = 4;
  std::chrono::milliseconds backoff_initial{250};
  std::chrono::milliseconds backoff_max{8000};
  std::chrono::seconds timeout{120};
  std::size_t embed_batch_size = 64;
};

struct GatewayStats {
  std::uint64_t network_calls = 0;  // HTTP attempts, including retried ones
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

// Stable content hash over endpoint kind, model, prompt, temperature,
// output budget and logprob settings. Equal requests give equal keys.
std::string cache_key(const ChatRequest& request);
std::string embedding_cache_key(std::string_view model, std::string_view text);

// Client for one OpenAI-compatible endpoint. Safe to share across threads;
// at most `max_in_flight` HTTP requests run at once.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Throws PreconditionError on an empty prompt, TransportError when retries
  // are exhausted or the endpoint rejects the request, CapabilityError when
  // logprobs were requested but not returned.
  ChatResponse chat_complete(ChatRequest request);

  EmbeddingResponse embed(std::span<const std::string> texts);
  EmbeddingResponse embed(std::span<const std::string> texts, const std::string& model);

  GatewayStats stats() const;
  const GatewayConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relann
