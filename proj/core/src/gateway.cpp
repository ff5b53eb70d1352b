// SPDX-License-Identifier: Apache-2.0
#include "relann/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "relann/errors.hpp"
#include "relann/hashing.hpp"
#include "relann/log.hpp"

namespace relann {

using nlohmann::json;

std::string cache_key(const ChatRequest& request) {
  json j;
  j["kind"] = "chat";
  j["model"] = request.model;
  j["system"] = request.system ? json(*request.system) : json(nullptr);
  j["user"] = request.user;
  j["temperature"] = request.temperature;
  j["max_output_tokens"] = request.max_output_tokens;
  j["want_logprobs"] = request.want_logprobs;
  j["top_logprobs"] = request.want_logprobs ? request.top_logprobs : 0;
  return sha256_hex(j.dump());
}

std::string embedding_cache_key(std::string_view model, std::string_view text) {
  json j;
  j["kind"] = "embedding";
  j["model"] = model;
  j["input"] = text;
  return sha256_hex(j.dump());
}

namespace {

// Two-level cache: an in-memory map in front of an optional directory of
// <key[0:2]>/<key>.json files. Records are write-once: the file is created
// by hard-linking a fully written temp file, so concurrent writers of one
// key leave exactly one record.
class ResponseCache {
 public:
  ResponseCache(std::filesystem::path dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {
    if (enabled_ && !dir_.empty()) std::filesystem::create_directories(dir_);
  }

  std::optional<std::string> get(const std::string& key) {
    if (!enabled_) return std::nullopt;
    {
      std::lock_guard lock(mutex_);
      if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string value = buf.str();
    std::lock_guard lock(mutex_);
    memory_.emplace(key, value);
    return value;
  }

  void put(const std::string& key, const std::string& value) {
    if (!enabled_) return;
    {
      std::lock_guard lock(mutex_);
      if (!memory_.emplace(key, value).second) return;
    }
    if (dir_.empty()) return;
    const auto final_path = path_for(key);
    std::filesystem::create_directories(final_path.parent_path());
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << std::this_thread::get_id() << "." << counter_.fetch_add(1);
    const auto tmp_path = final_path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      out << value;
    }
    std::error_code ec;
    std::filesystem::create_hard_link(tmp_path, final_path, ec);
    std::filesystem::remove(tmp_path);
  }

 private:
  std::filesystem::path path_for(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

  std::filesystem::path dir_;
  bool enabled_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::string> memory_;
  std::atomic<std::uint64_t> counter_{0};
};

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw PreconditionError("invalid endpoint base URL: " + url);
  ParsedUrl parsed{m[1].str(), m[2].matched ? m[2].str() : std::string{}};
  while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') parsed.path_prefix.pop_back();
  return parsed;
}

struct HttpResult {
  int status = 0;  // 0 = no response
  std::string body;
  std::string error;
};

bool transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

double clamp_logprob(double lp) { return std::min(lp, 0.0); }

ChatResponse decode_chat(const std::string& body, const ChatRequest& request) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("malformed chat response: ") + e.what(), 1, 200);
  }
  ChatResponse resp;
  try {
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    resp.text = content.is_null() ? std::string{} : content.get<std::string>();
    resp.model = j.value("model", request.model);
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      resp.prompt_tokens = u->value("prompt_tokens", std::uint64_t{0});
      resp.completion_tokens = u->value("completion_tokens", std::uint64_t{0});
    }
    if (request.want_logprobs) {
      auto lp = choice.find("logprobs");
      if (lp == choice.end() || lp->is_null() || !lp->contains("content") || lp->at("content").is_null() ||
          lp->at("content").empty()) {
        throw CapabilityError("endpoint returned no token logprobs for model \"" + request.model +
                              "\"; Tok calibration needs an endpoint that supports the logprobs option");
      }
      for (const auto& t : lp->at("content")) {
        TokenLogprob tok;
        tok.surface = t.at("token").get<std::string>();
        tok.logprob = clamp_logprob(t.at("logprob").get<double>());
        if (auto alts = t.find("top_logprobs"); alts != t.end() && alts->is_array()) {
          for (const auto& a : *alts) {
            tok.alternatives.emplace_back(a.at("token").get<std::string>(), clamp_logprob(a.at("logprob").get<double>()));
          }
        }
        resp.tokens.push_back(std::move(tok));
      }
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat response shape: ") + e.what(), 1, 200);
  }
  return resp;
}

std::vector<std::vector<double>> decode_embeddings(const std::string& body, std::size_t expected) {
  std::vector<std::vector<double>> out(expected);
  try {
    const auto j = json::parse(body);
    const auto& data = j.at("data");
    if (data.size() != expected) {
      throw TransportError("embedding response has " + std::to_string(data.size()) + " vectors, expected " +
                               std::to_string(expected),
                           1, 200);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data[i];
      const auto index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (index >= expected) throw TransportError("embedding index out of range", 1, 200);
      out[index] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected embedding response shape: ") + e.what(), 1, 200);
  }
  return out;
}

}  // namespace

struct Gateway::Impl {
  explicit Impl(GatewayConfig cfg)
      : config(std::move(cfg)),
        url(parse_base_url(config.base_url)),
        cache(config.cache_dir, config.cache_enabled),
        in_flight(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config.max_in_flight))) {
    if (config.max_attempts < 1) throw PreconditionError("max_attempts must be at least 1");
  }

  HttpResult post_once(const std::string& path, const std::string& body) {
    in_flight.acquire();
    HttpResult result;
    try {
      httplib::Client client(url.scheme_host_port);
      client.set_connection_timeout(config.timeout);
      client.set_read_timeout(config.timeout);
      client.set_write_timeout(config.timeout);
      httplib::Headers headers;
      if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
      auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
      if (res) {
        result.status = res->status;
        result.body = res->body;
      } else {
        result.error = httplib::to_string(res.error());
      }
    } catch (const std::exception& e) {
      result.error = e.what();
    }
    in_flight.release();
    network_calls.fetch_add(1);
    return result;
  }

  // POSTs with retry on transient failures. `on_client_error` may turn a
  // non-retryable status into a more specific exception.
  template <typename OnClientError>
  std::string post_with_retry(const std::string& path, const std::string& body, OnClientError&& on_client_error) {
    auto delay = config.backoff_initial;
    HttpResult last;
    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
      last = post_once(path, body);
      if (last.status == 200) return last.body;
      if (!transient(last.status)) {
        on_client_error(last);
        throw TransportError("endpoint " + path + " returned HTTP " + std::to_string(last.status) + ": " +
                                 last.body.substr(0, 300),
                             attempt, last.status);
      }
      if (attempt == config.max_attempts) break;
      retries.fetch_add(1);
      log::warn("retrying_request", {{"path", path},
                                     {"attempt", attempt},
                                     {"status", last.status},
                                     {"error", last.error},
                                     {"delay_ms", delay.count()}});
      std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, config.backoff_max);
    }
    throw TransportError("endpoint " + path + " failed after " + std::to_string(config.max_attempts) +
                             " attempts (last status " + std::to_string(last.status) +
                             (last.error.empty() ? "" : ", " + last.error) + ")",
                         config.max_attempts, last.status);
  }

  GatewayConfig config;
  ParsedUrl url;
  ResponseCache cache;
  std::counting_semaphore<> in_flight;
  std::atomic<std::uint64_t> network_calls{0};
  std::atomic<std::uint64_t> cache_hits{0};
  std::atomic<std::uint64_t> retries{0};
  std::atomic<std::uint64_t> prompt_tokens{0};
  std::atomic<std::uint64_t> completion_tokens{0};
};

Gateway::Gateway(GatewayConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Gateway::~Gateway() = default;

const GatewayConfig& Gateway::config() const { return impl_->config; }

GatewayStats Gateway::stats() const {
  GatewayStats s;
  s.network_calls = impl_->network_calls.load();
  s.cache_hits = impl_->cache_hits.load();
  s.retries = impl_->retries.load();
  s.prompt_tokens = impl_->prompt_tokens.load();
  s.completion_tokens = impl_->completion_tokens.load();
  return s;
}

ChatResponse Gateway::chat_complete(ChatRequest request) {
  if (request.user.empty()) throw PreconditionError("chat_complete: user prompt must be non-empty");
  if (request.temperature != 0.0) {
    log::warn("temperature_pinned", {{"requested", request.temperature}});
    request.temperature = 0.0;
  }

  const auto key = cache_key(request);
  if (auto hit = impl_->cache.get(key)) {
    auto resp = decode_chat(*hit, request);
    resp.cached = true;
    impl_->cache_hits.fetch_add(1);
    return resp;
  }

  json body;
  body["model"] = request.model;
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  if (request.want_logprobs) {
    body["logprobs"] = true;
    if (request.top_logprobs > 0) body["top_logprobs"] = request.top_logprobs;
  }

  const auto raw = impl_->post_with_retry("/chat/completions", body.dump(), [&](const HttpResult& r) {
    if (request.want_logprobs && r.status == 400 && r.body.find("logprob") != std::string::npos) {
      throw CapabilityError("endpoint rejected the logprobs option for model \"" + request.model +
                            "\": " + r.body.substr(0, 300));
    }
  });
  auto resp = decode_chat(raw, request);
  impl_->prompt_tokens.fetch_add(resp.prompt_tokens);
  impl_->completion_tokens.fetch_add(resp.completion_tokens);
  impl_->cache.put(key, raw);
  return resp;
}

EmbeddingResponse Gateway::embed(std::span<const std::string> texts) { return embed(texts, impl_->config.embedding_model); }

EmbeddingResponse Gateway::embed(std::span<const std::string> texts, const std::string& model) {
  if (texts.empty()) throw PreconditionError("embed: input list must be non-empty");
  for (const auto& t : texts) {
    if (t.empty()) throw PreconditionError("embed: input texts must be non-empty");
  }

  EmbeddingResponse out;
  out.vectors.resize(texts.size());

  // Unique uncached texts, each fetched once even if repeated in the batch.
  std::vector<std::string> pending;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto key = embedding_cache_key(model, texts[i]);
    if (auto hit = impl_->cache.get(key)) {
      out.vectors[i] = json::parse(*hit).get<std::vector<double>>();
      impl_->cache_hits.fetch_add(1);
      continue;
    }
    auto& slots = positions[texts[i]];
    if (slots.empty()) pending.push_back(texts[i]);
    slots.push_back(i);
  }

  const auto batch = std::max<std::size_t>(1, impl_->config.embed_batch_size);
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const auto end = std::min(pending.size(), start + batch);
    json body;
    body["model"] = model;
    body["input"] = std::vector<std::string>(pending.begin() + static_cast<std::ptrdiff_t>(start),
                                             pending.begin() + static_cast<std::ptrdiff_t>(end));
    const auto raw = impl_->post_with_retry("/embeddings", body.dump(), [](const HttpResult&) {});
    auto vectors = decode_embeddings(raw, end - start);
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      const auto& text = pending[start + k];
      impl_->cache.put(embedding_cache_key(model, text), json(vectors[k]).dump());
      for (auto i : positions[text]) out.vectors[i] = vectors[k];
    }
  }

  const auto dim = out.vectors.front().size();
  if (dim == 0) throw TransportError("embedding endpoint returned zero-dimensional vectors", 1, 200);
  for (const auto& v : out.vectors) {
    if (v.size() != dim) throw TransportError("embedding endpoint returned vectors of differing dimension", 1, 200);
  }
  return out;
}

}  // namespace relann
