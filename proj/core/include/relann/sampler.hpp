// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relann/annotation.hpp"
#include "relann/corpus.hpp"
#include "relann/retrieval.hpp"

namespace relann {

enum class FillPolicy { strict, fill };

std::string_view to_string(FillPolicy p);
FillPolicy fill_policy_from_string(std::string_view s);

struct SampleResult {
  // Ordered by retriever rank.
  std::vector<QueryDocPair> pairs;
  std::size_t inside_shortfall = 0;   // requested minus drawn from ranks <= k
  std::size_t outside_shortfall = 0;  // requested minus drawn from ranks > k
};

// Draws up to per_side docs uniformly without replacement from ranks <= k
// and as many from ranks > k. A short side logs "sample_shortfall"; with
// FillPolicy::fill the deficit is drawn from the other side's remainder.
SampleResult balanced_sample(const Ranking& ranking, std::size_t k, std::size_t per_side, std::uint64_t seed,
                             FillPolicy fill_policy = FillPolicy::strict);

// Per-key seed so that adding a query does not reshuffle the others.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

enum class ConfidenceBin { lt90, b90_95, b95_98, b98_100 };

std::string_view to_string(ConfidenceBin bin);
ConfidenceBin confidence_bin_from_string(std::string_view s);
// [0, .90), [.90, .95), [.95, .98), [.98, 1].
ConfidenceBin confidence_bin(double confidence);

struct Disagreement {
  std::string query_id;
  std::string doc_id;
  bool model_relevant = false;
  bool original_relevant = false;
  double confidence = 0.0;  // model confidence in its own guess
  ConfidenceBin bin = ConfidenceBin::lt90;

  friend bool operator==(const Disagreement&, const Disagreement&) = default;
};

// Keeps annotations whose guess contradicts the original label (pairs
// without an original label count as irrelevant; partial counts as
// relevant), bins them by confidence and samples min(per_bin, bin size)
// per bin. Output is grouped by bin, input order within a bin.
std::vector<Disagreement> stratify_disagreements(std::span<const Annotation> annotations,
                                                 std::span<const GoldLabel> original_labels, std::size_t per_bin,
                                                 std::uint64_t seed);

enum class Verdict { model, original };

struct AuditedDisagreement {
  Disagreement disagreement;
  Verdict verdict = Verdict::original;
};

struct AccuracyCell {
  std::optional<double> percent;  // absent for an empty stratum
  std::size_t n = 0;
};

// Accuracy of the model side in percent. Rows: all, original relevant,
// original irrelevant. Columns: confidence <= cutoff, > cutoff.
struct DisagreementTable {
  double cutoff = 0.95;
  std::array<std::array<AccuracyCell, 2>, 3> cells;
  // Share of the annotated corpus with confidence > cutoff, when the
  // corpus was supplied.
  std::optional<double> corpus_fraction_above;
};

DisagreementTable disagreement_accuracy_table(std::span<const AuditedDisagreement> audited, double cutoff = 0.95,
                                              std::span<const Annotation> corpus = {});

nlohmann::ordered_json to_json(const DisagreementTable& table);

// disagreements.jsonl:
// {"query_id","doc_id","model_guess","original_label","confidence","bin"}
void write_disagreements(const std::filesystem::path& path, std::span<const Disagreement> items);
std::vector<Disagreement> read_disagreements(const std::filesystem::path& path);
// verdicts.jsonl: {"query_id","doc_id","verdict":"model"|"original"}.
// Every disagreement must have a verdict.
std::vector<AuditedDisagreement> join_verdicts(std::span<const Disagreement> items,
                                               const std::filesystem::path& verdicts_path);

}  // namespace relann
