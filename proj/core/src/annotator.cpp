// SPDX-License-Identifier: Apache-2.0
#include "relann/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "relann/errors.hpp"
#include "relann/jsonl.hpp"
#include "relann/log.hpp"

namespace relann {

namespace {

constexpr std::string_view kGuessLabel = "[Guess]:";

// Lowercased surface with leading/trailing non-alphanumerics removed.
std::string stripped_word(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<Guess> token_class(std::string_view surface) {
  const auto w = stripped_word(surface);
  if (w == "yes") return Guess::yes;
  if (w == "no") return Guess::no;
  return std::nullopt;
}

struct TokHit {
  Guess guess;
  double probability;
};

TokHit locate_guess_token(const ChatResponse& response, bool renormalize) {
  if (response.tokens.empty()) {
    throw CapabilityError("response carries no token logprobs; Tok calibration needs them");
  }
  std::string joined;
  std::vector<std::size_t> starts;
  starts.reserve(response.tokens.size());
  for (const auto& t : response.tokens) {
    starts.push_back(joined.size());
    joined += t.surface;
  }
  const auto label = joined.rfind(kGuessLabel);
  if (label == std::string::npos) throw ExtractionError("token stream has no [Guess]: label");
  const auto after = label + kGuessLabel.size();

  for (std::size_t i = 0; i < response.tokens.size(); ++i) {
    const auto& tok = response.tokens[i];
    const auto end = starts[i] + tok.surface.size();
    if (end <= after) continue;
    // A token straddling the label only contributes the part after it.
    const std::string_view visible =
        starts[i] >= after ? std::string_view(tok.surface) : std::string_view(tok.surface).substr(after - starts[i]);
    const auto word = stripped_word(visible);
    if (word.empty()) {
      if (visible.find('\n') != std::string_view::npos) break;
      continue;
    }
    const auto cls = token_class(visible);
    if (!cls) break;

    double p = std::exp(tok.logprob);
    if (renormalize) {
      double same = 0.0, other = 0.0;
      bool realized_listed = false;
      for (const auto& [alt, lp] : tok.alternatives) {
        const auto alt_cls = token_class(alt);
        if (!alt_cls) continue;
        (*alt_cls == *cls ? same : other) += std::exp(lp);
        if (alt == tok.surface) realized_listed = true;
      }
      if (!realized_listed) same += p;
      p = same / (same + other);
    }
    return {*cls, p};
  }
  throw ExtractionError("no Yes/No token follows the final [Guess]: label");
}

}  // namespace

double extract_tok_confidence(const ChatResponse& response, bool renormalize) {
  return locate_guess_token(response, renormalize).probability;
}

double derive_relevance_score(Guess guess, double confidence) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw PreconditionError("derive_relevance_score: confidence outside [0, 1]");
  }
  return guess == Guess::yes ? confidence : 1.0 - confidence;
}

ConfidenceSource AnnotatorConfig::primary_source() const {
  if (primary) return *primary;
  return calibration == Calibration::ask ? ConfidenceSource::ask : ConfidenceSource::tok;
}

void AnnotatorConfig::validate() const {
  if (model.empty()) throw PreconditionError("annotator: model name is empty");
  if (variant.ranking_mode != RankingMode::pointwise) {
    throw PreconditionError("annotator: variant " + to_string(variant) + " is not pointwise");
  }
  const auto p = primary_source();
  if (p == ConfidenceSource::tok && calibration == Calibration::ask) {
    throw PreconditionError("annotator: primary source tok needs calibration tok or both");
  }
  if (p == ConfidenceSource::ask && calibration == Calibration::tok) {
    throw PreconditionError("annotator: primary source ask needs calibration ask or both");
  }
}

Annotation annotate_pair(const QueryDocPair& pair, const Query& query, const RelevanceDefinition* definition,
                         const DocumentChunk& chunk, const AnnotatorConfig& config, Gateway& gateway) {
  const bool want_tok = config.calibration != Calibration::ask;
  const bool want_ask = config.calibration != Calibration::tok;

  ChatRequest req;
  req.model = config.model;
  req.user = render_pointwise_prompt(query, definition, chunk, config.variant);
  req.max_output_tokens = config.max_output_tokens;
  req.want_logprobs = want_tok;
  req.top_logprobs = want_tok && config.renormalize_tok ? 5 : 0;
  const auto resp = gateway.chat_complete(req);

  Annotation a;
  a.query_id = pair.query_id;
  a.doc_id = pair.doc_id;
  a.model = config.model;
  a.variant = config.variant;

  std::optional<ParsedPointwise> parsed;
  try {
    parsed = parse_pointwise_response(resp.text, config.variant);
  } catch (const ParseError&) {
    if (want_ask) throw;
  }
  if (parsed) {
    a.guess = parsed->guess;
    a.reason = parsed->reason;
    if (want_ask) a.confidence_ask = parsed->confidence;
  }
  if (want_tok) {
    const auto hit = locate_guess_token(resp, config.renormalize_tok);
    if (parsed && hit.guess != parsed->guess) {
      throw ExtractionError("guess token \"" + std::string(to_string(hit.guess)) + "\" disagrees with parsed guess \"" +
                            std::string(to_string(parsed->guess)) + "\"");
    }
    a.guess = hit.guess;
    a.confidence_tok = hit.probability;
  }
  const double primary =
      config.primary_source() == ConfidenceSource::tok ? *a.confidence_tok : *a.confidence_ask;
  a.relevance_score = derive_relevance_score(a.guess, primary);
  return a;
}

CorpusResult annotate_corpus(std::span<const QueryDocPair> pairs, std::span<const Query> queries,
                             std::span<const DocumentChunk> chunks, const AnnotatorConfig& config, Gateway& gateway,
                             std::size_t parallelism) {
  if (parallelism == 0) throw PreconditionError("annotate_corpus: parallelism must be >= 1");
  config.validate();

  std::unordered_map<std::string, const Query*> query_by_id;
  for (const auto& q : queries) query_by_id.emplace(q.id, &q);
  std::unordered_map<std::string, const DocumentChunk*> chunk_by_id;
  for (const auto& c : chunks) chunk_by_id.emplace(c.id, &c);
  for (const auto& p : pairs) {
    if (!query_by_id.contains(p.query_id)) throw PreconditionError("pair references unknown query " + p.query_id);
    if (!chunk_by_id.contains(p.doc_id)) throw PreconditionError("pair references unknown document " + p.doc_id);
    const auto* q = query_by_id.at(p.query_id);
    if (config.variant.with_definition && !q->definition) {
      throw PreconditionError("variant " + to_string(config.variant) + " needs a definition but query " + q->id +
                              " has none (run `define` first or pick a variant without -d)");
    }
  }

  const auto before = gateway.stats();
  std::vector<std::optional<Annotation>> annotations(pairs.size());
  std::vector<std::optional<PairError>> errors(pairs.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  const std::size_t report_every = std::max<std::size_t>(1, pairs.size() / 10);

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const auto i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      const auto& p = pairs[i];
      const auto* q = query_by_id.at(p.query_id);
      const auto* def = config.variant.with_definition ? &*q->definition : nullptr;
      try {
        annotations[i] = annotate_pair(p, *q, def, *chunk_by_id.at(p.doc_id), config, gateway);
      } catch (const ParseError& e) {
        errors[i] = PairError{p.query_id, p.doc_id, "parse", e.what(), e.raw()};
      } catch (const ExtractionError& e) {
        errors[i] = PairError{p.query_id, p.doc_id, "extraction", e.what(), std::nullopt};
      } catch (const TransportError& e) {
        errors[i] = PairError{p.query_id, p.doc_id, "transport", e.what(), std::nullopt};
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      }
      if (errors[i]) {
        log::warn("pair_failed", {{"query_id", p.query_id},
                                  {"doc_id", p.doc_id},
                                  {"kind", errors[i]->kind},
                                  {"message", errors[i]->message}});
      }
      const auto d = done.fetch_add(1) + 1;
      if (d % report_every == 0 || d == pairs.size()) {
        const auto s = gateway.stats();
        log::info("annotate_progress", {{"done", d},
                                        {"total", pairs.size()},
                                        {"network_calls", s.network_calls - before.network_calls},
                                        {"cache_hits", s.cache_hits - before.cache_hits}});
      }
    }
  };

  const auto n_threads = std::min(parallelism, std::max<std::size_t>(1, pairs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  CorpusResult result;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (annotations[i]) result.annotations.push_back(std::move(*annotations[i]));
    if (errors[i]) result.errors.push_back(std::move(*errors[i]));
  }
  const auto after = gateway.stats();
  result.stats.pairs = pairs.size();
  result.stats.annotated = result.annotations.size();
  result.stats.failed = result.errors.size();
  result.stats.network_calls = after.network_calls - before.network_calls;
  result.stats.cache_hits = after.cache_hits - before.cache_hits;
  result.stats.prompt_tokens = after.prompt_tokens - before.prompt_tokens;
  result.stats.completion_tokens = after.completion_tokens - before.completion_tokens;
  return result;
}

void write_errors(const std::filesystem::path& path, std::span<const PairError> errors) {
  std::vector<nlohmann::ordered_json> records;
  records.reserve(errors.size());
  for (const auto& e : errors) {
    nlohmann::ordered_json j;
    j["query_id"] = e.query_id;
    j["doc_id"] = e.doc_id;
    j["kind"] = e.kind;
    j["message"] = e.message;
    if (e.raw) j["raw"] = *e.raw;
    records.push_back(std::move(j));
  }
  jsonl::write_file(path, records);
}

ListwiseResult listwise_rerank(const Query& query, std::span<const DocumentChunk> initial,
                               const RelevanceDefinition* definition, const ListwiseConfig& config, Gateway& gateway) {
  if (config.window < 2) throw PreconditionError("listwise_rerank: window must be >= 2");
  if (config.step < 1 || config.step > config.window) {
    throw PreconditionError("listwise_rerank: step must lie in [1, window]");
  }
  if (config.window > kMaxListwiseWindow) {
    throw PreconditionError("listwise_rerank: window exceeds " + std::to_string(kMaxListwiseWindow));
  }
  if (initial.empty()) throw PreconditionError("listwise_rerank: empty initial ranking for " + query.id);

  std::vector<const DocumentChunk*> order;
  order.reserve(initial.size());
  for (const auto& c : initial) order.push_back(&c);

  ListwiseResult result;
  const std::size_t n = order.size();
  std::size_t end = n;
  std::size_t start = n > config.window ? n - config.window : 0;
  for (;;) {
    if (end - start >= 2) {
      result.windows.emplace_back(start, end);
      std::vector<std::string> passages;
      for (std::size_t i = start; i < end; ++i) passages.push_back(order[i]->text);
      const auto prompt = render_listwise_prompt(query, passages, definition);
      ChatRequest req;
      req.model = config.model;
      req.system = prompt.system;
      req.user = prompt.user;
      req.max_output_tokens = config.max_output_tokens;
      try {
        const auto resp = gateway.chat_complete(req);
        const auto perm = parse_listwise_response(resp.text, passages.size());
        std::vector<const DocumentChunk*> window(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));
        for (std::size_t i = 0; i < perm.size(); ++i) order[start + i] = window[perm[i] - 1];
      } catch (const ParseError& e) {
        ++result.failed_windows;
        log::warn("listwise_window_failed",
                  {{"query_id", query.id}, {"begin", start}, {"end", end}, {"error", e.what()}, {"raw", e.raw()}});
      } catch (const TransportError& e) {
        ++result.failed_windows;
        log::warn("listwise_window_failed", {{"query_id", query.id}, {"begin", start}, {"end", end}, {"error", e.what()}});
      }
    }
    if (start == 0) break;
    end -= config.step;
    start = start > config.step ? start - config.step : 0;
  }

  result.ranking.query_id = query.id;
  for (std::size_t i = 0; i < n; ++i) {
    result.ranking.entries.push_back({order[i]->id, static_cast<double>(n - i) / static_cast<double>(n)});
  }
  return result;
}

std::vector<std::pair<std::string, double>> relevant_info_proxy(std::span<const Annotation> annotations) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& a : annotations) {
    auto& [sum, count] = acc[a.query_id];
    sum += a.relevance_score;
    ++count;
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [qid, sc] : acc) out.emplace_back(qid, sc.first / static_cast<double>(sc.second));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string proxy_csv(std::span<const std::pair<std::string, double>> proxy) {
  std::string out = "query_id,mean_relevance_score\n";
  for (const auto& [qid, mean] : proxy) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, mean);
    const bool quote = qid.find_first_of(",\"\n") != std::string::npos;
    std::string field = qid;
    if (quote) {
      std::string escaped;
      for (const char c : qid) {
        if (c == '"') escaped += '"';
        escaped += c;
      }
      field = "\"" + escaped + "\"";
    }
    out += field + "," + std::string(buf, ec == std::errc() ? ptr : buf) + "\n";
  }
  return out;
}

}  // namespace relann
