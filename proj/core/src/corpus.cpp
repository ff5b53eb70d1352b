// SPDX-License-Identifier: Apache-2.0
#include "relann/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "random.hpp"
#include "relann/errors.hpp"
#include "relann/log.hpp"

namespace relann {

BinaryLabel GoldLabel::effective_binary() const {
  if (binary) return *binary;
  if (grade <= 0.0) return BinaryLabel::irrelevant;
  if (grade >= 1.0) return BinaryLabel::relevant;
  return BinaryLabel::partial;
}

SplitSide Split::classify(std::string_view query_id, std::string_view report_id) const {
  const std::string q(query_id);
  const std::string r(report_id);
  if (train_queries.contains(q) && train_reports.contains(r)) return SplitSide::train;
  if (test_queries.contains(q) && test_reports.contains(r)) return SplitSide::test;
  return SplitSide::unassigned;
}

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (const char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

MergeResult merge_short_chunks(std::span<const DocumentChunk> chunks, std::size_t min_tokens) {
  if (min_tokens == 0) throw PreconditionError("merge_short_chunks: min_tokens must be positive");

  MergeResult result;
  std::optional<DocumentChunk> pending;

  auto flush = [&](bool report_end) {
    if (!pending) return;
    if (report_end && pending->token_count < min_tokens) {
      result.short_chunks.push_back(pending->id);
      log::warn("short_chunk", {{"doc_id", pending->id},
                                {"report_id", pending->report_id},
                                {"token_count", pending->token_count},
                                {"min_tokens", min_tokens}});
    }
    result.chunks.push_back(std::move(*pending));
    pending.reset();
  };

  for (const auto& chunk : chunks) {
    if (pending && pending->report_id != chunk.report_id) flush(true);
    if (!pending) {
      pending = chunk;
    } else {
      pending->id += "+" + chunk.id;
      pending->text += "\n" + chunk.text;
      pending->token_count += chunk.token_count;
    }
    if (pending->token_count >= min_tokens) flush(false);
  }
  flush(true);
  return result;
}

namespace {

std::vector<std::string> unique_in_order(std::span<const std::string> ids) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

std::size_t test_size(double fraction, std::size_t n) {
  auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, n - 1);
}

}  // namespace

Split split_train_test(std::span<const std::string> query_ids, std::span<const std::string> report_ids,
                       double query_test_fraction, double report_test_fraction, std::uint64_t seed) {
  auto queries = unique_in_order(query_ids);
  auto reports = unique_in_order(report_ids);
  if (queries.size() < 2 || reports.size() < 2) {
    throw PreconditionError("split impossible: need at least 2 queries and 2 reports");
  }
  auto valid = [](double f) { return f > 0.0 && f < 1.0; };
  if (!valid(query_test_fraction) || !valid(report_test_fraction)) {
    throw PreconditionError("split_train_test: fractions must lie in (0, 1)");
  }

  detail::Rng rng(seed);
  Split split;
  split.seed = seed;

  detail::shuffle(queries, rng);
  const auto q_test = test_size(query_test_fraction, queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    (i < q_test ? split.test_queries : split.train_queries).insert(queries[i]);
  }

  detail::shuffle(reports, rng);
  const auto r_test = test_size(report_test_fraction, reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    (i < r_test ? split.test_reports : split.train_reports).insert(reports[i]);
  }
  return split;
}

std::string_view to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::duplicate_id: return "duplicate_id";
    case FindingKind::dangling_reference: return "dangling_reference";
    case FindingKind::empty_text: return "empty_text";
    case FindingKind::grade_out_of_range: return "grade_out_of_range";
    case FindingKind::inconsistent_label: return "inconsistent_label";
    case FindingKind::token_count_mismatch: return "token_count_mismatch";
    case FindingKind::invalid_definition: return "invalid_definition";
  }
  return "unknown";
}

std::size_t ValidationReport::count(FindingKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [kind](const Finding& f) { return f.kind == kind; }));
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

ValidationReport validate_corpus(std::span<const Query> queries, std::span<const DocumentChunk> chunks,
                                 std::span<const GoldLabel> gold, const TokenCounter& counter) {
  ValidationReport report;
  auto add = [&](FindingKind kind, std::string detail) { report.findings.push_back({kind, std::move(detail)}); };

  std::unordered_set<std::string> query_ids;
  for (const auto& q : queries) {
    if (!query_ids.insert(q.id).second) add(FindingKind::duplicate_id, "query " + q.id);
    if (blank(q.text)) add(FindingKind::empty_text, "query " + q.id);
    if (q.definition && blank(q.definition->meaning)) {
      add(FindingKind::invalid_definition, "query " + q.id + ": empty meaning");
    }
  }

  // Chunk ids are checked for uniqueness both per report and globally:
  // pairs and gold rows reference documents by id alone.
  std::unordered_set<std::string> doc_ids;
  std::set<std::pair<std::string, std::string>> report_doc;
  for (const auto& c : chunks) {
    if (!report_doc.emplace(c.report_id, c.id).second) {
      add(FindingKind::duplicate_id, "document " + c.report_id + "/" + c.id);
    } else if (!doc_ids.insert(c.id).second) {
      add(FindingKind::duplicate_id, "document id " + c.id + " reused across reports");
    }
    if (blank(c.text)) add(FindingKind::empty_text, "document " + c.id);
    if (counter) {
      const auto expected = counter(c.text);
      if (expected != c.token_count) {
        add(FindingKind::token_count_mismatch, "document " + c.id + ": stored " + std::to_string(c.token_count) +
                                                   ", counted " + std::to_string(expected));
      }
    }
  }

  std::set<std::pair<std::string, std::string>> gold_keys;
  for (const auto& g : gold) {
    const std::string where = "gold (" + g.query_id + ", " + g.doc_id + ")";
    if (!query_ids.contains(g.query_id)) add(FindingKind::dangling_reference, where + ": unknown query_id");
    if (!doc_ids.contains(g.doc_id)) add(FindingKind::dangling_reference, where + ": unknown doc_id");
    if (!gold_keys.emplace(g.query_id, g.doc_id).second) add(FindingKind::duplicate_id, where);
    if (!(g.grade >= 0.0 && g.grade <= 1.0)) add(FindingKind::grade_out_of_range, where);
    if (g.binary == BinaryLabel::irrelevant && g.grade != 0.0) {
      add(FindingKind::inconsistent_label, where + ": irrelevant with non-zero grade");
    }
    if (g.binary && g.binary != BinaryLabel::irrelevant && g.grade == 0.0) {
      add(FindingKind::inconsistent_label, where + ": " + (g.binary == BinaryLabel::relevant ? "relevant" : "partial") +
                                               " with zero grade");
    }
  }
  return report;
}

}  // namespace relann
