// SPDX-License-Identifier: Apache-2.0
#include "relann/sampler.hpp"

#include <algorithm>
#include <map>

#include "random.hpp"
#include "relann/errors.hpp"
#include "relann/jsonl.hpp"
#include "relann/log.hpp"

namespace relann {

std::string_view to_string(FillPolicy p) { return p == FillPolicy::strict ? "strict" : "fill"; }

FillPolicy fill_policy_from_string(std::string_view s) {
  if (s == "strict") return FillPolicy::strict;
  if (s == "fill") return FillPolicy::fill;
  throw PreconditionError("unknown fill policy \"" + std::string(s) + "\" (strict, fill)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer over the combination
  std::uint64_t z = seed ^ h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SampleResult balanced_sample(const Ranking& ranking, std::size_t k, std::size_t per_side, std::uint64_t seed,
                             FillPolicy fill_policy) {
  if (ranking.entries.empty()) throw PreconditionError("balanced_sample: empty ranking for " + ranking.query_id);
  if (k == 0 || per_side == 0) throw PreconditionError("balanced_sample: k and per_side must be >= 1");

  const std::size_t n = ranking.entries.size();
  const std::size_t n_in = std::min(k, n);
  const std::size_t n_out = n - n_in;
  std::size_t take_in = std::min(per_side, n_in);
  std::size_t take_out = std::min(per_side, n_out);

  SampleResult result;
  result.inside_shortfall = per_side - take_in;
  result.outside_shortfall = per_side - take_out;
  if (result.inside_shortfall) {
    log::warn("sample_shortfall",
              {{"query_id", ranking.query_id}, {"side", "inside"}, {"shortfall", result.inside_shortfall}});
  }
  if (result.outside_shortfall) {
    log::warn("sample_shortfall",
              {{"query_id", ranking.query_id}, {"side", "outside"}, {"shortfall", result.outside_shortfall}});
  }
  if (fill_policy == FillPolicy::fill) {
    const auto extra_out = std::min(result.inside_shortfall, n_out - take_out);
    const auto extra_in = std::min(result.outside_shortfall, n_in - take_in);
    take_out += extra_out;
    take_in += extra_in;
  }

  detail::Rng rng(seed);
  const auto inside = detail::sample_indices(n_in, take_in, rng);
  const auto outside = detail::sample_indices(n_out, take_out, rng);
  auto emit = [&](std::size_t index) {
    QueryDocPair p;
    p.query_id = ranking.query_id;
    p.doc_id = ranking.entries[index].doc_id;
    p.retriever_rank = static_cast<int>(index + 1);
    result.pairs.push_back(std::move(p));
  };
  for (const auto i : inside) emit(i);
  for (const auto i : outside) emit(n_in + i);
  return result;
}

std::string_view to_string(ConfidenceBin bin) {
  switch (bin) {
    case ConfidenceBin::lt90: return "lt90";
    case ConfidenceBin::b90_95: return "b90_95";
    case ConfidenceBin::b95_98: return "b95_98";
    case ConfidenceBin::b98_100: return "b98_100";
  }
  return "unknown";
}

ConfidenceBin confidence_bin_from_string(std::string_view s) {
  for (auto b : {ConfidenceBin::lt90, ConfidenceBin::b90_95, ConfidenceBin::b95_98, ConfidenceBin::b98_100}) {
    if (to_string(b) == s) return b;
  }
  throw SchemaError("unknown confidence bin \"" + std::string(s) + "\"");
}

ConfidenceBin confidence_bin(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw PreconditionError("confidence_bin: confidence outside [0, 1]");
  if (c < 0.90) return ConfidenceBin::lt90;
  if (c < 0.95) return ConfidenceBin::b90_95;
  if (c < 0.98) return ConfidenceBin::b95_98;
  return ConfidenceBin::b98_100;
}

std::vector<Disagreement> stratify_disagreements(std::span<const Annotation> annotations,
                                                 std::span<const GoldLabel> original_labels, std::size_t per_bin,
                                                 std::uint64_t seed) {
  std::map<std::pair<std::string, std::string>, bool> original;
  for (const auto& g : original_labels) {
    original[{g.query_id, g.doc_id}] = g.effective_binary() != BinaryLabel::irrelevant;
  }

  std::array<std::vector<Disagreement>, 4> bins;
  for (const auto& a : annotations) {
    const auto it = original.find({a.query_id, a.doc_id});
    const bool orig = it != original.end() && it->second;
    const bool model = a.guess == Guess::yes;
    if (model == orig) continue;
    Disagreement d{a.query_id, a.doc_id, model, orig, a.confidence(), ConfidenceBin::lt90};
    d.bin = confidence_bin(d.confidence);
    bins[static_cast<std::size_t>(d.bin)].push_back(std::move(d));
  }

  detail::Rng rng(seed);
  std::vector<Disagreement> out;
  for (auto& bin : bins) {
    if (bin.empty()) continue;
    if (bin.size() < per_bin) {
      log::warn("bin_shortfall", {{"bin", to_string(bin.front().bin)}, {"available", bin.size()}, {"requested", per_bin}});
    }
    for (const auto i : detail::sample_indices(bin.size(), std::min(per_bin, bin.size()), rng)) {
      out.push_back(bin[i]);
    }
  }
  return out;
}

DisagreementTable disagreement_accuracy_table(std::span<const AuditedDisagreement> audited, double cutoff,
                                              std::span<const Annotation> corpus) {
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw PreconditionError("disagreement_accuracy_table: cutoff outside [0, 1]");
  DisagreementTable t;
  t.cutoff = cutoff;
  std::array<std::array<std::size_t, 2>, 3> right{};
  for (const auto& item : audited) {
    const auto col = item.disagreement.confidence > cutoff ? 1 : 0;
    const auto row = item.disagreement.original_relevant ? 1 : 2;
    const std::size_t hit = item.verdict == Verdict::model ? 1 : 0;
    for (const auto r : {0, row}) {
      t.cells[r][col].n += 1;
      right[r][col] += hit;
    }
  }
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      if (t.cells[r][c].n) {
        t.cells[r][c].percent = 100.0 * static_cast<double>(right[r][c]) / static_cast<double>(t.cells[r][c].n);
      }
    }
  }
  if (!corpus.empty()) {
    const auto above = std::count_if(corpus.begin(), corpus.end(), [&](const Annotation& a) {
      return a.confidence() > cutoff;
    });
    t.corpus_fraction_above = static_cast<double>(above) / static_cast<double>(corpus.size());
  }
  return t;
}

nlohmann::ordered_json to_json(const DisagreementTable& table) {
  static constexpr const char* rows[] = {"all", "original_relevant", "original_irrelevant"};
  nlohmann::ordered_json j;
  j["cutoff"] = table.cutoff;
  for (std::size_t r = 0; r < 3; ++r) {
    nlohmann::ordered_json row;
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& cell = table.cells[r][c];
      nlohmann::ordered_json v;
      v["accuracy"] = cell.percent ? nlohmann::ordered_json(*cell.percent) : nlohmann::ordered_json(nullptr);
      v["n"] = cell.n;
      row[c == 0 ? "at_or_below_cutoff" : "above_cutoff"] = std::move(v);
    }
    j[rows[r]] = std::move(row);
  }
  j["corpus_fraction_above_cutoff"] =
      table.corpus_fraction_above ? nlohmann::ordered_json(*table.corpus_fraction_above) : nlohmann::ordered_json(nullptr);
  return j;
}

namespace {

std::string_view relevance_word(bool relevant) { return relevant ? "relevant" : "irrelevant"; }

bool relevance_from_word(const std::string& s, const std::string& where) {
  if (s == "relevant") return true;
  if (s == "irrelevant") return false;
  throw SchemaError(where + ": expected \"relevant\" or \"irrelevant\", got \"" + s + "\"");
}

}  // namespace

void write_disagreements(const std::filesystem::path& path, std::span<const Disagreement> items) {
  std::vector<nlohmann::ordered_json> records;
  for (const auto& d : items) {
    nlohmann::ordered_json j;
    j["query_id"] = d.query_id;
    j["doc_id"] = d.doc_id;
    j["model_guess"] = relevance_word(d.model_relevant);
    j["original_label"] = relevance_word(d.original_relevant);
    j["confidence"] = d.confidence;
    j["bin"] = to_string(d.bin);
    records.push_back(std::move(j));
  }
  jsonl::write_file(path, records);
}

std::vector<Disagreement> read_disagreements(const std::filesystem::path& path) {
  std::vector<Disagreement> out;
  jsonl::for_each_line(path, [&](const nlohmann::json& j, std::size_t line) {
    const auto where = path.filename().string() + ":" + std::to_string(line);
    Disagreement d;
    d.query_id = jsonl::require_string(j, "query_id", where);
    d.doc_id = jsonl::require_string(j, "doc_id", where);
    d.model_relevant = relevance_from_word(jsonl::require_string(j, "model_guess", where), where);
    d.original_relevant = relevance_from_word(jsonl::require_string(j, "original_label", where), where);
    d.confidence = jsonl::require_number(j, "confidence", where);
    d.bin = confidence_bin(d.confidence);
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<AuditedDisagreement> join_verdicts(std::span<const Disagreement> items,
                                               const std::filesystem::path& verdicts_path) {
  std::map<std::pair<std::string, std::string>, Verdict> verdicts;
  jsonl::for_each_line(verdicts_path, [&](const nlohmann::json& j, std::size_t line) {
    const auto where = verdicts_path.filename().string() + ":" + std::to_string(line);
    const auto v = jsonl::require_string(j, "verdict", where);
    if (v != "model" && v != "original") throw SchemaError(where + ": verdict must be \"model\" or \"original\"");
    verdicts[{jsonl::require_string(j, "query_id", where), jsonl::require_string(j, "doc_id", where)}] =
        v == "model" ? Verdict::model : Verdict::original;
  });
  std::vector<AuditedDisagreement> out;
  for (const auto& d : items) {
    const auto it = verdicts.find({d.query_id, d.doc_id});
    if (it == verdicts.end()) {
      throw PreconditionError("no verdict for disagreement " + d.query_id + "/" + d.doc_id);
    }
    out.push_back({d, it->second});
  }
  return out;
}

}  // namespace relann
