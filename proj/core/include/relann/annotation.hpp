// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relann/prompting.hpp"

namespace relann {

// Which confidence a run extracts: the verbalized one, the guess-token
// probability, or both.
enum class Calibration { ask, tok, both };
enum class ConfidenceSource { ask, tok };

std::string_view to_string(Calibration c);
Calibration calibration_from_string(std::string_view s);
std::string_view to_string(ConfidenceSource s);
ConfidenceSource confidence_source_from_string(std::string_view s);

// One pointwise judgment.
struct Annotation {
  std::string query_id;
  std::string doc_id;
  Guess guess = Guess::no;
  std::optional<double> confidence_ask;  // [0, 1]
  std::optional<double> confidence_tok;  // (0, 1]
  double relevance_score = 0.0;          // P(relevant) from the primary source
  std::optional<std::string> reason;
  std::string model;
  PromptVariant variant;

  // Confidence that the guess is correct under the primary source.
  double confidence() const { return guess == Guess::yes ? relevance_score : 1.0 - relevance_score; }
  // Confidence from a specific source; throws PreconditionError when that
  // source was not extracted.
  double confidence(ConfidenceSource source) const;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// annotations.jsonl:
// {"query_id","doc_id","guess","confidence_ask"?,"confidence_tok"?,"relevance_score","reason"?,"model","variant"}
nlohmann::ordered_json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j, const std::string& where);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations);

}  // namespace relann
