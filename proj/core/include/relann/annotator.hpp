// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relann/annotation.hpp"
#include "relann/corpus.hpp"
#include "relann/gateway.hpp"
#include "relann/prompting.hpp"
#include "relann/retrieval.hpp"

namespace relann {

// Probability of the first Yes/No token generated after the final
// "[Guess]:" label. Surfaces are compared after trimming whitespace and
// punctuation, case-insensitively. With `renormalize` the probability is
// divided by the Yes + No mass found among the position's alternatives.
// Throws CapabilityError when the response has no tokens and
// ExtractionError when no such token exists.
double extract_tok_confidence(const ChatResponse& response, bool renormalize = false);

// Yes -> confidence, No -> 1 - confidence.
double derive_relevance_score(Guess guess, double confidence);

struct AnnotatorConfig {
  std::string model;
  PromptVariant variant;
  Calibration calibration = Calibration::both;
  // Source of relevance_score. Default: tok when extracted, else ask.
  std::optional<ConfidenceSource> primary;
  bool renormalize_tok = false;
  int max_output_tokens = 512;

  ConfidenceSource primary_source() const;
  // Throws PreconditionError for inconsistent settings.
  void validate() const;
};

// Renders, calls the gateway, parses and extracts. Throws ParseError,
// ExtractionError or TransportError for per-pair failures and
// CapabilityError / PreconditionError for configuration problems.
Annotation annotate_pair(const QueryDocPair& pair, const Query& query, const RelevanceDefinition* definition,
                         const DocumentChunk& chunk, const AnnotatorConfig& config, Gateway& gateway);

struct PairError {
  std::string query_id;
  std::string doc_id;
  std::string kind;  // "parse", "extraction", "transport"
  std::string message;
  std::optional<std::string> raw;
};

struct CorpusStats {
  std::size_t pairs = 0;
  std::size_t annotated = 0;
  std::size_t failed = 0;
  std::uint64_t network_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct CorpusResult {
  std::vector<Annotation> annotations;  // input pair order
  std::vector<PairError> errors;        // input pair order
  CorpusStats stats;
};

// Annotates every pair with `parallelism` workers. Output order follows the
// input regardless of parallelism. Per-pair failures go to `errors`;
// configuration and capability errors abort the run.
CorpusResult annotate_corpus(std::span<const QueryDocPair> pairs, std::span<const Query> queries,
                             std::span<const DocumentChunk> chunks, const AnnotatorConfig& config, Gateway& gateway,
                             std::size_t parallelism = 1);

void write_errors(const std::filesystem::path& path, std::span<const PairError> errors);

struct ListwiseConfig {
  std::string model;
  std::size_t window = 20;
  std::size_t step = 10;
  int max_output_tokens = 512;
};

struct ListwiseResult {
  Ranking ranking;
  // Windows in processing order as 0-based [begin, end) positions.
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  std::size_t failed_windows = 0;
};

// Sliding-window pass from the tail of `initial` toward the head. A window
// whose reply cannot be parsed (or whose call fails) keeps its prior order
// and logs "listwise_window_failed". Scores are rank-derived: (n - i) / n.
ListwiseResult listwise_rerank(const Query& query, std::span<const DocumentChunk> initial,
                               const RelevanceDefinition* definition, const ListwiseConfig& config, Gateway& gateway);

// Mean relevance_score per query, highest first (ties by query id).
std::vector<std::pair<std::string, double>> relevant_info_proxy(std::span<const Annotation> annotations);
// "query_id,mean_relevance_score" header plus one row per query.
std::string proxy_csv(std::span<const std::pair<std::string, double>> proxy);

}  // namespace relann
