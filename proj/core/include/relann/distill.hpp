// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relann/annotation.hpp"
#include "relann/corpus.hpp"
#include "relann/prompting.hpp"

namespace relann {

// One supervised example in chat form.
struct TrainingRecord {
  std::optional<std::string> system;
  std::string user;       // full rendered pointwise prompt
  std::string assistant;  // answer block the student should emit
  std::string query_id;
  std::string doc_id;
  std::string variant;
  std::string teacher_model;
};

struct ExportOptions {
  PromptVariant variant;
  // Confidence written into completions. Default: ask when the annotation
  // carries it, else tok.
  std::optional<ConfidenceSource> source;
};

struct ExportResult {
  std::vector<TrainingRecord> records;
  std::size_t skipped = 0;  // CoT records without a reason
  nlohmann::ordered_json manifest;
};

// Builds training records. Every annotation must belong to the train side
// of `split` (its query and its report); anything else throws LeakageError.
// Queries and documents are looked up by id.
ExportResult build_training_data(std::span<const Annotation> annotations, std::span<const Query> queries,
                                 std::span<const DocumentChunk> chunks, const Split& split, const ExportOptions& options);

// Writes <out_path> (one {"system"?,"user","assistant","meta"} per line)
// and manifest.json next to it. Returns the record count.
std::size_t export_training_data(std::span<const Annotation> annotations, std::span<const Query> queries,
                                 std::span<const DocumentChunk> chunks, const Split& split, const ExportOptions& options,
                                 const std::filesystem::path& out_path);

nlohmann::ordered_json to_json(const TrainingRecord& record);
TrainingRecord training_record_from_json(const nlohmann::json& j, const std::string& where);
std::vector<TrainingRecord> read_training_records(const std::filesystem::path& path);

struct QueryBalance {
  std::size_t yes = 0;
  std::size_t no = 0;
  bool flagged = false;
};

struct BalanceReport {
  std::size_t yes = 0;
  std::size_t no = 0;
  double yes_fraction = 0.0;
  bool flagged = false;
  std::map<std::string, QueryBalance> per_query;
  // Expected queries that received no record.
  std::vector<std::string> empty_queries;
};

// Guesses are read back from each record's completion. Ratios outside
// [band_low, band_high] Yes fraction are flagged.
BalanceReport audit_balance(std::span<const TrainingRecord> records, std::span<const std::string> expected_queries = {},
                            double band_low = 0.25, double band_high = 0.75);

nlohmann::ordered_json to_json(const BalanceReport& report);

}  // namespace relann
