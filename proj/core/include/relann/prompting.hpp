// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relann/corpus.hpp"

namespace relann {

enum class RankingMode { pointwise, listwise };
enum class ConfidencePhrasing { ask_confidence, ask_probability };

struct PromptVariant {
  RankingMode ranking_mode = RankingMode::pointwise;
  bool cot = false;
  bool with_definition = true;
  ConfidencePhrasing confidence_phrasing = ConfidencePhrasing::ask_confidence;

  friend bool operator==(const PromptVariant&, const PromptVariant&) = default;
};

// Canonical names: "point[-cot]-ask[-d]", "point[-cot]-prob[-d]",
// "list[-d]". Listwise ignores cot and phrasing.
std::string to_string(const PromptVariant& variant);
// Throws PreconditionError for an unknown name.
PromptVariant parse_variant(std::string_view name);

enum class Guess { yes, no };

std::string_view to_string(Guess guess);  // "Yes" / "No"
Guess parse_guess(std::string_view text);  // throws SchemaError

struct ParsedPointwise {
  std::optional<std::string> reason;
  Guess guess = Guess::no;
  // Confidence that `guess` is correct. For the probability phrasing this
  // is derived from the reported P(helpful): p for Yes, 1 - p for No.
  double confidence = 0.0;
  // Raw "[Probability Helpful]" value for the probability phrasing.
  std::optional<double> probability_helpful;

  friend bool operator==(const ParsedPointwise&, const ParsedPointwise&) = default;
};

// Largest window render_listwise_prompt accepts.
inline constexpr std::size_t kMaxListwiseWindow = 100;

struct ListwisePrompt {
  std::string system;
  std::string user;
};

std::string render_definition_prompt(std::string_view question);

// Throws PreconditionError when `gold_examples` is empty.
std::string render_improved_definition_prompt(std::string_view question,
                                              std::span<const std::string> gold_examples);

// The text placed in the background-information slot of the pointwise
// prompt. Fixed (QA) definitions are used as-is; the others render their
// meaning followed by the numbered example list.
std::string render_background(const RelevanceDefinition& definition);

// Throws PreconditionError when the variant is listwise, or when
// with_definition is set and `definition` is absent.
std::string render_pointwise_prompt(const Query& query, const RelevanceDefinition* definition,
                                    const DocumentChunk& chunk, const PromptVariant& variant);

// Passages are numbered [1]..[n] in the given order.
ListwisePrompt render_listwise_prompt(const Query& query, std::span<const std::string> passages,
                                      const RelevanceDefinition* definition = nullptr);

// Constant definition for QA datasets: a document counts only if it
// answers the question. provenance = fixed.
RelevanceDefinition render_fixed_qa_definition();

// Reads a definition reply ("Meaning of the question: ..." followed by a
// numbered example list). Throws ParseError when the meaning is missing.
RelevanceDefinition parse_definition_response(std::string_view text, DefinitionProvenance provenance);

// Takes the last occurrence of each label. Throws ParseError (carrying the
// raw text) when the guess or confidence field is missing or invalid.
// Out-of-range confidences are clamped with a "confidence_clamped" warning.
ParsedPointwise parse_pointwise_response(std::string_view text, const PromptVariant& variant);

// The answer block a model following the template would emit.
std::string format_pointwise_answer(const ParsedPointwise& parsed, const PromptVariant& variant);

// Shortest decimal that parses back to `value`, always with a fractional
// part ("1.0", "0.85").
std::string format_confidence(double value);

// 1-based permutation of 1..n. Duplicates keep their first occurrence,
// out-of-range ids are dropped and missing ids are appended in order.
// Throws ParseError when the text has no bracketed integer.
std::vector<std::size_t> parse_listwise_response(std::string_view text, std::size_t n);

// Version label and sha256 of every template asset, by file name.
std::string_view template_version();
std::vector<std::pair<std::string, std::string>> template_hashes();

}  // namespace relann
