// SPDX-License-Identifier: Apache-2.0
#include "relann/mock_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "relann/errors.hpp"
#include "relann/hashing.hpp"
#include "relann/jsonl.hpp"

namespace relann::mock {

using nlohmann::json;

std::vector<double> bag_of_words_embedding(std::string_view text, std::size_t dim) {
  if (dim == 0) throw PreconditionError("embedding dimension must be positive");
  std::vector<double> v(dim, 0.0);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : word) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v[h % dim] += 1.0;
    word.clear();
  };
  for (const char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return v;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::string tok;
    if (c == ' ' && i + 1 < text.size() && std::isalnum(static_cast<unsigned char>(text[i + 1]))) {
      tok.push_back(' ');
      ++i;
    }
    if (std::isalnum(static_cast<unsigned char>(text[i]))) {
      while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) tok.push_back(text[i++]);
    } else if (tok.empty()) {
      tok.push_back(text[i++]);
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

namespace {

std::string trim_token(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::set<std::string> content_words(std::string_view text) {
  static const std::set<std::string> kStop = {"the",  "and",  "for",  "what", "does", "with", "are",  "how",
                                              "its",  "this", "that", "from", "which", "any", "has",  "have",
                                              "was",  "were", "been", "into", "about", "their", "they", "our"};
  std::set<std::string> out;
  std::string word;
  auto flush = [&] {
    if (word.size() >= 3 && !kStop.contains(word)) out.insert(word);
    word.clear();
  };
  for (const char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// Fraction of the question's content words found in the passage.
double overlap(std::string_view question, std::string_view passage) {
  const auto q = content_words(question);
  if (q.empty()) return 0.0;
  const auto p = content_words(passage);
  std::size_t hit = 0;
  for (const auto& w : q) hit += p.contains(w) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(q.size());
}

std::string between(std::string_view text, std::string_view open, std::string_view close, std::size_t from = 0) {
  const auto b = text.find(open, from);
  if (b == std::string_view::npos) return {};
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  if (e == std::string_view::npos) return {};
  return std::string(text.substr(start, e - start));
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

struct Answer {
  std::string content;
  std::map<std::string, double> token_logprobs;
};

Answer overlap_pointwise(const std::string& prompt) {
  const auto question = between(prompt, "<question>: \"", "\"\n");
  std::string paragraph;
  if (auto start = prompt.find("<paragraph>: \""); start != std::string::npos) {
    start += 14;
    const auto ask = prompt.find("\nIs <paragraph>", start);
    const auto end = prompt.rfind('"', ask == std::string::npos ? prompt.size() : ask);
    if (end != std::string::npos && end > start) paragraph = prompt.substr(start, end - start);
  }
  const double score = overlap(question, paragraph);
  const double p_helpful = std::round((0.05 + 0.9 * score) * 100.0) / 100.0;
  const bool yes = p_helpful >= 0.5;
  const double confidence = std::round((yes ? p_helpful : 1.0 - p_helpful) * 100.0) / 100.0;

  Answer a;
  if (prompt.find("[Reason]: <Reason") != std::string::npos) {
    a.content += "[Reason]: " + fixed2(score * 100.0) + "% of the question terms occur in the paragraph.\n";
  }
  a.content += std::string("[Guess]: ") + (yes ? "Yes" : "No") + "\n";
  if (prompt.find("[Probability Helpful]:") != std::string::npos) {
    a.content += "[Probability Helpful]: " + fixed2(p_helpful);
  } else {
    a.content += "[Confidence]: " + fixed2(confidence);
  }
  a.token_logprobs[yes ? "Yes" : "No"] = 0.5 * std::log(confidence);
  return a;
}

Answer overlap_listwise(const std::string& prompt) {
  const std::string marker = "Rank the passages based on their relevance to the search query: ";
  const auto qpos = prompt.find(marker);
  const auto qend = prompt.find(".\n", qpos == std::string::npos ? 0 : qpos);
  const std::string query =
      qpos == std::string::npos || qend == std::string::npos ? "" : prompt.substr(qpos + marker.size(), qend - qpos - marker.size());
  const auto body_start = qend == std::string::npos ? 0 : qend + 2;
  const auto body_end = prompt.find("\nSearch Query: ", body_start);
  const std::string body = prompt.substr(body_start, body_end == std::string::npos ? std::string::npos : body_end - body_start);

  std::vector<std::pair<int, std::string>> passages;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto eol = body.find('\n', pos);
    if (eol == std::string::npos) eol = body.size();
    const std::string line = body.substr(pos, eol - pos);
    int id = 0;
    int consumed = 0;
    if (line.size() > 2 && line[0] == '[' && std::sscanf(line.c_str(), "[%d]%n", &id, &consumed) == 1) {
      passages.emplace_back(id, line.substr(std::min(line.size(), static_cast<std::size_t>(consumed) + 1)));
    } else if (!passages.empty()) {
      passages.back().second += "\n" + line;
    }
    pos = eol + 1;
  }
  std::vector<std::pair<double, int>> scored;
  for (const auto& [id, text] : passages) scored.emplace_back(overlap(query, text), id);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  Answer a;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (i) a.content += " > ";
    a.content += "[" + std::to_string(scored[i].second) + "]";
  }
  return a;
}

Answer overlap_definition(const std::string& prompt) {
  const auto question = between(prompt, "<question>: \"\"", "\"\"");
  Answer a;
  a.content = "Meaning of the question: The question \"" + question + "\" is asking for information about " +
              question + "\n\nExamples of information that the question is looking for:\n" +
              "1. Statements in the report that directly address: " + question + "\n" +
              "2. Quantitative disclosures, targets or metrics related to: " + question;
  const auto examples =
      between(prompt, "[BEGIN <list of question-relevant example information>]\n", "\n--- [END");
  if (!examples.empty()) {
    int n = 3;
    std::size_t pos = 0;
    while (pos < examples.size()) {
      auto eol = examples.find('\n', pos);
      if (eol == std::string::npos) eol = examples.size();
      const auto line = examples.substr(pos, eol - pos);
      if (!line.empty()) a.content += "\n" + std::to_string(n++) + ". Information similar to: " + line;
      pos = eol + 1;
    }
  }
  return a;
}

json token_entry(const std::string& surface, double logprob, int top) {
  json t;
  t["token"] = surface;
  t["logprob"] = logprob;
  t["bytes"] = nullptr;
  json alts = json::array();
  if (top > 0) {
    alts.push_back({{"token", surface}, {"logprob", logprob}});
    const auto word = lower(trim_token(surface));
    if ((word == "yes" || word == "no") && logprob < 0.0 && top > 1) {
      std::string other = surface;
      const auto at = other.find(trim_token(surface));
      const std::string replacement = word == "yes" ? "No" : "Yes";
      other.replace(at, trim_token(surface).size(), replacement);
      alts.push_back({{"token", other}, {"logprob", std::log1p(-std::exp(logprob))}});
    }
  }
  t["top_logprobs"] = std::move(alts);
  return t;
}

}  // namespace

Fixtures Fixtures::load(const std::filesystem::path& dir) {
  Fixtures f;
  if (!std::filesystem::is_directory(dir)) throw PreconditionError("fixtures directory not found: " + dir.string());

  if (const auto cfg = dir / "mock.json"; std::filesystem::exists(cfg)) {
    const auto j = json::parse(jsonl::read_text(cfg));
    const auto mode = j.value("fallback", std::string("none"));
    if (mode == "overlap") {
      f.fallback = Fallback::overlap;
    } else if (mode != "none") {
      throw SchemaError("mock.json: unknown fallback \"" + mode + "\"");
    }
    f.embedding_dim = j.value("embedding_dim", f.embedding_dim);
  }

  if (const auto path = dir / "chat.jsonl"; std::filesystem::exists(path)) {
    jsonl::for_each_line(path, [&](const json& j, std::size_t line) {
      const std::string where = "chat.jsonl:" + std::to_string(line);
      ChatFixture fx;
      if (auto m = j.find("match"); m != j.end()) {
        if (m->is_string()) {
          fx.match.push_back(m->get<std::string>());
        } else {
          fx.match = m->get<std::vector<std::string>>();
        }
      }
      if (j.contains("model")) fx.model = j.at("model").get<std::string>();
      fx.content = jsonl::require_string(j, "content", where);
      if (auto t = j.find("tokens"); t != j.end()) {
        std::vector<std::pair<std::string, double>> tokens;
        for (const auto& pair : *t) tokens.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<double>());
        fx.tokens = std::move(tokens);
      }
      if (auto t = j.find("token_logprobs"); t != j.end()) fx.token_logprobs = t->get<std::map<std::string, double>>();
      if (auto t = j.find("token_probs"); t != j.end()) {
        for (const auto& [surface, p] : t->get<std::map<std::string, double>>()) fx.token_logprobs[surface] = std::log(p);
      }
      if (auto t = j.find("fail_statuses"); t != j.end()) fx.fail_statuses = t->get<std::vector<int>>();
      fx.omit_logprobs = j.value("omit_logprobs", false);
      f.chat.push_back(std::move(fx));
    });
  }

  if (const auto path = dir / "embeddings.jsonl"; std::filesystem::exists(path)) {
    jsonl::for_each_line(path, [&](const json& j, std::size_t line) {
      EmbeddingFixture fx;
      fx.text = jsonl::require_string(j, "text", "embeddings.jsonl:" + std::to_string(line));
      fx.vector = j.at("vector").get<std::vector<double>>();
      f.embeddings.push_back(std::move(fx));
    });
  }
  return f;
}

struct Server::Impl {
  Fixtures fixtures;
  std::string host;
  int port = -1;
  httplib::Server http;
  std::thread thread;
  mutable std::mutex mutex;
  std::vector<std::size_t> failures_served;  // per chat fixture
  ServerCounters counters;

  json chat(const json& req, int& status) {
    const auto model = req.value("model", std::string("mock"));
    std::string system_text, user_text;
    for (const auto& m : req.at("messages")) {
      const auto role = m.value("role", std::string{});
      const auto content = m.value("content", std::string{});
      (role == "system" ? system_text : user_text) += content;
    }
    const std::string prompt = system_text + "\n" + user_text;
    const bool want_logprobs = req.value("logprobs", false);
    const int top = req.value("top_logprobs", 0);

    std::optional<std::size_t> matched;
    {
      std::lock_guard lock(mutex);
      ++counters.chat_requests;
      for (std::size_t i = 0; i < fixtures.chat.size(); ++i) {
        const auto& fx = fixtures.chat[i];
        if (fx.model && *fx.model != model) continue;
        const bool all = std::all_of(fx.match.begin(), fx.match.end(),
                                     [&](const std::string& s) { return prompt.find(s) != std::string::npos; });
        if (!all) continue;
        if (failures_served[i] < fx.fail_statuses.size()) {
          status = fx.fail_statuses[failures_served[i]++];
          return {{"error", {{"message", "injected failure"}, {"code", status}}}};
        }
        matched = i;
        break;
      }
      if (!matched && fixtures.fallback == Fallback::none) ++counters.unmatched;
    }

    Answer answer;
    std::optional<std::vector<std::pair<std::string, double>>> explicit_tokens;
    bool omit = false;
    if (matched) {
      const auto& fx = fixtures.chat[*matched];
      answer.content = fx.content;
      answer.token_logprobs = fx.token_logprobs;
      explicit_tokens = fx.tokens;
      omit = fx.omit_logprobs;
    } else if (fixtures.fallback == Fallback::overlap) {
      if (system_text.find("RankLLM") != std::string::npos) {
        answer = overlap_listwise(user_text);
      } else if (user_text.find("Meaning of the question: <the question's meaning>") != std::string::npos) {
        answer = overlap_definition(user_text);
      } else {
        answer = overlap_pointwise(user_text);
      }
    } else {
      status = 404;
      return {{"error", {{"message", "no fixture matches the request"}}}};
    }

    json choice;
    choice["index"] = 0;
    choice["message"] = {{"role", "assistant"}, {"content", answer.content}};
    choice["finish_reason"] = "stop";
    std::size_t completion_tokens = 0;
    if (want_logprobs && !omit) {
      json content = json::array();
      if (explicit_tokens) {
        for (const auto& [surface, lp] : *explicit_tokens) content.push_back(token_entry(surface, lp, top));
      } else {
        for (const auto& surface : tokenize(answer.content)) {
          double lp = 0.0;
          if (auto it = answer.token_logprobs.find(trim_token(surface)); it != answer.token_logprobs.end()) lp = it->second;
          content.push_back(token_entry(surface, lp, top));
        }
      }
      completion_tokens = content.size();
      choice["logprobs"] = {{"content", std::move(content)}};
    } else {
      completion_tokens = tokenize(answer.content).size();
      choice["logprobs"] = nullptr;
    }

    json resp;
    resp["id"] = "mock-" + sha256_hex(prompt).substr(0, 16);
    resp["object"] = "chat.completion";
    resp["created"] = 0;
    resp["model"] = model;
    resp["choices"] = json::array({std::move(choice)});
    const auto prompt_tokens = tokenize(prompt).size();
    resp["usage"] = {{"prompt_tokens", prompt_tokens},
                     {"completion_tokens", completion_tokens},
                     {"total_tokens", prompt_tokens + completion_tokens}};
    status = 200;
    return resp;
  }

  json embeddings(const json& req) {
    {
      std::lock_guard lock(mutex);
      ++counters.embedding_requests;
    }
    std::vector<std::string> inputs;
    if (req.at("input").is_string()) {
      inputs.push_back(req.at("input").get<std::string>());
    } else {
      inputs = req.at("input").get<std::vector<std::string>>();
    }
    json data = json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::vector<double> v;
      for (const auto& fx : fixtures.embeddings) {
        if (fx.text == inputs[i]) {
          v = fx.vector;
          break;
        }
      }
      if (v.empty()) v = bag_of_words_embedding(inputs[i], fixtures.embedding_dim);
      data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", std::move(v)}});
    }
    return {{"object", "list"}, {"data", std::move(data)}, {"model", req.value("model", std::string("mock"))}};
  }
};

Server::Server(Fixtures fixtures, const std::string& host, int port) : impl_(std::make_unique<Impl>()) {
  impl_->fixtures = std::move(fixtures);
  impl_->failures_served.assign(impl_->fixtures.chat.size(), 0);
  impl_->host = host;

  auto handle = [this](auto&& fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        res.status = 400;
        res.set_content(json({{"error", {{"message", e.what()}}}}).dump(), "application/json");
        return;
      }
      int status = 200;
      json out;
      try {
        out = fn(body, status);
      } catch (const std::exception& e) {
        status = 400;
        out = {{"error", {{"message", e.what()}}}};
      }
      res.status = status;
      res.set_content(out.dump(), "application/json");
    };
  };
  impl_->http.Post("/v1/chat/completions",
                   handle([this](const json& body, int& status) { return impl_->chat(body, status); }));
  impl_->http.Post("/v1/embeddings", handle([this](const json& body, int&) { return impl_->embeddings(body); }));

  impl_->port = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (impl_->port <= 0) throw Error("mock server could not bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

Server::~Server() { stop(); }

int Server::port() const { return impl_->port; }

std::string Server::base_url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port) + "/v1"; }

ServerCounters Server::counters() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->counters;
}

void Server::stop() {
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void Server::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace relann::mock
