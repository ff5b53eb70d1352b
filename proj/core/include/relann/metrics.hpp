// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relann/corpus.hpp"

namespace relann::metrics {

struct CalibrationInput {
  std::vector<double> confidences;  // each in [0, 1]
  std::vector<bool> correct;
};

// Per query: predicted score and gold gain by doc id. Every gold doc must
// have a prediction; predicted docs without a gold row have gain 0.
struct QueryRun {
  std::map<std::string, double> scores;
  std::map<std::string, double> gains;
};
using RunAndGold = std::map<std::string, QueryRun>;

// Equal-width bins over [0, 1]; a confidence of exactly 1 falls in the
// last bin. Empty bins contribute nothing.
double ece(const CalibrationInput& input, int bins = 10);
double brier(const CalibrationInput& input);
// Mann-Whitney probability that a correct item outranks an incorrect one,
// ties counted 1/2. Throws UndefinedMetricError for single-class input.
double auroc(const CalibrationInput& input);

// Scores sorted descending, ties kept in input order.
// AP = (1/P) * sum over positive ranks k of precision@k.
// Throws UndefinedMetricError with no positives.
double average_precision(std::span<const double> scores, const std::vector<bool>& positives);

enum class PartialPolicy { as_relevant, as_irrelevant };

double f1_binary(const std::vector<bool>& predicted_relevant, std::span<const GoldLabel> gold,
                 PartialPolicy partial_policy = PartialPolicy::as_relevant);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

Confusion confusion(const std::vector<bool>& predicted_relevant, const std::vector<bool>& gold_relevant);

// The predicted order of one query: score descending, then doc id.
std::vector<std::string> predicted_order(const QueryRun& run);

// Macro-averaged over queries with at least one positive gain; other
// queries are skipped with a "query_excluded" warning and, when given,
// listed in `excluded`. k = nullopt ranks the full list.
double ndcg(const RunAndGold& run, std::optional<std::size_t> k = std::nullopt,
            std::vector<std::string>* excluded = nullptr);
// Gold is binarized as gain > binarize_threshold. At a cutoff k the sum of
// precisions is divided by the query's total relevant count.
double map(const RunAndGold& run, std::optional<std::size_t> k = std::nullopt, double binarize_threshold = 0.0,
           std::vector<std::string>* excluded = nullptr);

enum class GainScheme { three_way, graded_1_3, binary };

std::string_view to_string(GainScheme scheme);
GainScheme gain_scheme_from_string(std::string_view name);

// three_way: relevant 1, partial 0.5, irrelevant 0.
// graded_1_3: "1" 1/3, "2" 2/3, "3" 1, "0"/"" (unannotated) 0.
// binary: relevant 1, anything else 0.
// Unknown labels throw PreconditionError.
std::function<double(std::string_view)> gain_mapping(GainScheme scheme);

// Tau-b between two orders of the same id set (n >= 2). Items are compared
// by position, so neither side has ties.
double kendall_tau(std::span<const std::string> rank_a, std::span<const std::string> rank_b);
// Tau-b between two score vectors over the same items, tie-corrected.
// O(n log n).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);
// Per-query tau-b over the score-induced orders of the shared doc set,
// macro-averaged. Queries with fewer than two shared docs are skipped.
double kendall_tau_macro(const std::map<std::string, std::map<std::string, double>>& a,
                         const std::map<std::string, std::map<std::string, double>>& b);

struct SubMetrics {
  std::optional<double> ece, brier, auroc, ndcg, map, f1, ap;
};

struct MetricReport {
  double unc = 0, bin = 0, cal = 0, info = 0, avg = 0;
  SubMetrics raw;
};

// Throws PreconditionError naming the first missing sub-metric.
MetricReport aggregate_report(const SubMetrics& sub);

// Dimension helpers, on the 0-100 scale.
double calibration_dimension(double auroc, double ece, double brier);
double information_dimension(double ndcg, double map);

struct SweepPoint {
  double theta = 0, f1 = 0, precision = 0, recall = 0;
};

// Predict relevant iff score >= theta.
std::vector<SweepPoint> f1_threshold_sweep(std::span<const double> scores, const std::vector<bool>& gold_relevant,
                                           std::span<const double> grid);
// "theta,f1,precision,recall" header plus one row per point.
std::string sweep_csv(std::span<const SweepPoint> points);

}  // namespace relann::metrics
