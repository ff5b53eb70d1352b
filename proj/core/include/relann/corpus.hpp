// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relann {

enum class DefinitionProvenance { generated, improved, fixed, human };

// Explicit relevance criteria for a query: what the question means and
// example information that counts as relevant.
struct RelevanceDefinition {
  std::string meaning;
  std::vector<std::string> examples;
  DefinitionProvenance provenance = DefinitionProvenance::generated;

  friend bool operator==(const RelevanceDefinition&, const RelevanceDefinition&) = default;
};

struct Query {
  std::string id;
  std::string text;
  std::optional<RelevanceDefinition> definition;

  friend bool operator==(const Query&, const Query&) = default;
};

struct DocumentChunk {
  std::string id;
  std::string report_id;
  std::string text;
  std::size_t token_count = 0;

  friend bool operator==(const DocumentChunk&, const DocumentChunk&) = default;
};

enum class SplitSide { train, test, unassigned };

struct QueryDocPair {
  std::string query_id;
  std::string doc_id;
  std::optional<int> retriever_rank;  // 1-based
  SplitSide split = SplitSide::unassigned;

  friend bool operator==(const QueryDocPair&, const QueryDocPair&) = default;
};

enum class BinaryLabel { relevant, partial, irrelevant };

// Human ground truth for one pair. `grade` is the graded gain in [0, 1];
// `label` keeps the raw annotation (e.g. "2" on a 1-3 scale) when the
// source file carried one, so gain schemes can be re-applied.
struct GoldLabel {
  std::string query_id;
  std::string doc_id;
  double grade = 0.0;
  std::optional<BinaryLabel> binary;
  bool uncertain = false;
  std::optional<std::string> label;

  // `binary` when present, otherwise inferred from the grade:
  // 0 -> irrelevant, 1 -> relevant, anything in between -> partial.
  BinaryLabel effective_binary() const;
};

// Leakage-free partition of queries and reports.
struct Split {
  std::set<std::string> train_queries;
  std::set<std::string> test_queries;
  std::set<std::string> train_reports;
  std::set<std::string> test_reports;
  std::uint64_t seed = 0;

  // train only when both the query and the report are on the train side,
  // test when both are on the test side, unassigned otherwise.
  SplitSide classify(std::string_view query_id, std::string_view report_id) const;

  friend bool operator==(const Split&, const Split&) = default;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

std::size_t count_whitespace_tokens(std::string_view text);

struct MergeResult {
  std::vector<DocumentChunk> chunks;
  // Ids of output chunks left below the threshold (trailing chunk of a
  // report with nothing after it to absorb).
  std::vector<std::string> short_chunks;
};

// Greedy left-to-right accumulation per report run: consecutive chunks are
// concatenated (newline separator) until the accumulated token count
// reaches `min_tokens`. Merged chunk ids are the constituent ids joined by
// '+'. Token counts are summed from the inputs.
MergeResult merge_short_chunks(std::span<const DocumentChunk> chunks, std::size_t min_tokens);

// Partition sizes are round(fraction * n), clamped so each side keeps at
// least one element. Deterministic for a given seed.
Split split_train_test(std::span<const std::string> query_ids, std::span<const std::string> report_ids,
                       double query_test_fraction, double report_test_fraction, std::uint64_t seed);

enum class FindingKind {
  duplicate_id,
  dangling_reference,
  empty_text,
  grade_out_of_range,
  inconsistent_label,
  token_count_mismatch,
  invalid_definition,
};

std::string_view to_string(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(FindingKind kind) const;
};

// Never throws on bad data; every problem becomes a finding. Token counts
// are checked against `counter` when one is given.
ValidationReport validate_corpus(std::span<const Query> queries, std::span<const DocumentChunk> chunks,
                                 std::span<const GoldLabel> gold = {},
                                 const TokenCounter& counter = {});

}  // namespace relann
