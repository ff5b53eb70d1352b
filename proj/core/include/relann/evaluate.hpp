// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relann/annotation.hpp"
#include "relann/corpus.hpp"
#include "relann/metrics.hpp"

namespace relann {

// How gold rows become ranking gains. `grade` uses GoldLabel::grade as-is;
// the named schemes map the binary label (three_way, binary) or the raw
// label (graded_1_3) through metrics::gain_mapping.
enum class GainSource { grade, three_way, graded_1_3, binary };

std::string_view to_string(GainSource s);
GainSource gain_source_from_string(std::string_view s);

// Annotated pairs without a gold row.
enum class UnlabeledPolicy { irrelevant, skip };

struct EvaluateOptions {
  GainSource gains = GainSource::three_way;
  metrics::PartialPolicy partial_policy = metrics::PartialPolicy::as_relevant;
  // Confidence used for calibration and uncertainty. Default: the
  // annotation's primary source (derived from relevance_score).
  std::optional<ConfidenceSource> confidence_source;
  UnlabeledPolicy unlabeled = UnlabeledPolicy::irrelevant;
  int ece_bins = 10;
  std::optional<std::size_t> k;
};

struct Evaluation {
  metrics::SubMetrics sub;
  // Dimensions on the 0-100 scale; absent when an input sub-metric is
  // undefined for this data.
  std::optional<double> unc, bin, cal, info, avg;
  std::map<std::string, std::string> undefined;  // sub-metric -> reason
  std::vector<std::string> excluded_queries;
  std::size_t pairs = 0;
  std::size_t unlabeled_pairs = 0;
  std::size_t gold_without_annotation = 0;
};

// Scores the annotations against gold over the annotated pairs. Gold rows
// with no annotation are ignored (and counted).
Evaluation evaluate_annotations(std::span<const Annotation> annotations, std::span<const GoldLabel> gold,
                                const EvaluateOptions& options = {});

nlohmann::ordered_json to_json(const Evaluation& e, const EvaluateOptions& options);

// Per query: doc id -> relevance_score.
std::map<std::string, std::map<std::string, double>> scores_by_query(std::span<const Annotation> annotations);

}  // namespace relann
