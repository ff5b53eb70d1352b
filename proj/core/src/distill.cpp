// SPDX-License-Identifier: Apache-2.0
#include "relann/distill.hpp"

#include <set>
#include <unordered_map>

#include "relann/annotator.hpp"
#include "relann/errors.hpp"
#include "relann/jsonl.hpp"
#include "relann/log.hpp"

namespace relann {

namespace {

std::string_view side_name(SplitSide s) {
  switch (s) {
    case SplitSide::train: return "train";
    case SplitSide::test: return "test";
    case SplitSide::unassigned: return "unassigned";
  }
  return "unknown";
}

}  // namespace

ExportResult build_training_data(std::span<const Annotation> annotations, std::span<const Query> queries,
                                 std::span<const DocumentChunk> chunks, const Split& split, const ExportOptions& options) {
  const auto& variant = options.variant;
  if (variant.ranking_mode != RankingMode::pointwise) {
    throw PreconditionError("distill: variant " + to_string(variant) + " is not pointwise");
  }
  std::unordered_map<std::string, const Query*> query_by_id;
  for (const auto& q : queries) query_by_id.emplace(q.id, &q);
  std::unordered_map<std::string, const DocumentChunk*> chunk_by_id;
  for (const auto& c : chunks) chunk_by_id.emplace(c.id, &c);

  // The guard runs over every annotation before anything is rendered, so a
  // leaking record aborts the export without partial output.
  for (const auto& a : annotations) {
    const auto q = query_by_id.find(a.query_id);
    if (q == query_by_id.end()) throw PreconditionError("distill: unknown query " + a.query_id);
    const auto c = chunk_by_id.find(a.doc_id);
    if (c == chunk_by_id.end()) throw PreconditionError("distill: unknown document " + a.doc_id);
    const auto side = split.classify(a.query_id, c->second->report_id);
    if (side != SplitSide::train) {
      throw LeakageError("distill: pair (" + a.query_id + ", " + a.doc_id + ") from report " + c->second->report_id +
                         " is on the " + std::string(side_name(side)) +
                         " side of the split; only train-side pairs may be exported");
    }
  }
  for (const auto& a : annotations) {
    if (variant.with_definition && !query_by_id.at(a.query_id)->definition) {
      throw PreconditionError("distill: variant " + to_string(variant) + " needs a definition for query " + a.query_id);
    }
  }

  ExportResult result;
  std::size_t yes = 0;
  std::set<std::string> teachers;
  for (const auto& a : annotations) {
    if (variant.cot && !a.reason) {
      ++result.skipped;
      log::warn("record_skipped", {{"query_id", a.query_id}, {"doc_id", a.doc_id}, {"reason", "missing CoT reason"}});
      continue;
    }
    const auto& q = *query_by_id.at(a.query_id);
    const auto& c = *chunk_by_id.at(a.doc_id);
    const auto source = options.source.value_or(a.confidence_ask ? ConfidenceSource::ask : ConfidenceSource::tok);

    ParsedPointwise answer;
    answer.guess = a.guess;
    answer.confidence = a.confidence(source);
    if (variant.cot) answer.reason = a.reason;
    if (variant.confidence_phrasing == ConfidencePhrasing::ask_probability) {
      answer.probability_helpful = derive_relevance_score(a.guess, answer.confidence);
    }

    TrainingRecord r;
    r.user = render_pointwise_prompt(q, variant.with_definition ? &*q.definition : nullptr, c, variant);
    r.assistant = format_pointwise_answer(answer, variant);
    r.query_id = a.query_id;
    r.doc_id = a.doc_id;
    r.variant = to_string(variant);
    r.teacher_model = a.model;
    teachers.insert(a.model);
    yes += a.guess == Guess::yes ? 1 : 0;
    result.records.push_back(std::move(r));
  }

  const auto n = result.records.size();
  auto& m = result.manifest;
  m["records"] = n;
  m["skipped"] = result.skipped;
  m["yes"] = yes;
  m["no"] = n - yes;
  m["yes_fraction"] = n ? nlohmann::ordered_json(static_cast<double>(yes) / static_cast<double>(n))
                        : nlohmann::ordered_json(nullptr);
  m["variant"] = to_string(variant);
  m["teacher_models"] = std::vector<std::string>(teachers.begin(), teachers.end());
  m["confidence_source"] = options.source ? std::string(to_string(*options.source)) : std::string("ask_else_tok");
  m["split_seed"] = split.seed;
  m["template_version"] = template_version();
  nlohmann::ordered_json hashes;
  for (const auto& [name, hash] : template_hashes()) hashes[name] = hash;
  m["template_sha256"] = std::move(hashes);
  return result;
}

nlohmann::ordered_json to_json(const TrainingRecord& r) {
  nlohmann::ordered_json j;
  if (r.system) j["system"] = *r.system;
  j["user"] = r.user;
  j["assistant"] = r.assistant;
  j["meta"] = {{"query_id", r.query_id}, {"doc_id", r.doc_id}, {"variant", r.variant}, {"teacher_model", r.teacher_model}};
  return j;
}

TrainingRecord training_record_from_json(const nlohmann::json& j, const std::string& where) {
  TrainingRecord r;
  if (j.contains("system")) r.system = jsonl::require_string(j, "system", where);
  r.user = jsonl::require_string(j, "user", where);
  r.assistant = jsonl::require_string(j, "assistant", where);
  const auto meta = j.find("meta");
  if (meta == j.end() || !meta->is_object()) throw SchemaError(where + ": field \"meta\" must be an object");
  r.query_id = jsonl::require_string(*meta, "query_id", where);
  r.doc_id = jsonl::require_string(*meta, "doc_id", where);
  r.variant = jsonl::require_string(*meta, "variant", where);
  r.teacher_model = jsonl::require_string(*meta, "teacher_model", where);
  return r;
}

std::vector<TrainingRecord> read_training_records(const std::filesystem::path& path) {
  std::vector<TrainingRecord> out;
  jsonl::for_each_line(path, [&](const nlohmann::json& j, std::size_t line) {
    out.push_back(training_record_from_json(j, path.filename().string() + ":" + std::to_string(line)));
  });
  return out;
}

std::size_t export_training_data(std::span<const Annotation> annotations, std::span<const Query> queries,
                                 std::span<const DocumentChunk> chunks, const Split& split, const ExportOptions& options,
                                 const std::filesystem::path& out_path) {
  auto result = build_training_data(annotations, queries, chunks, split, options);
  std::vector<nlohmann::ordered_json> lines;
  lines.reserve(result.records.size());
  for (const auto& r : result.records) lines.push_back(to_json(r));
  jsonl::write_file(out_path, lines);
  auto manifest = result.manifest;
  manifest["output"] = out_path.filename().string();
  jsonl::write_text(out_path.parent_path() / "manifest.json", manifest.dump(2) + "\n");
  return result.records.size();
}

BalanceReport audit_balance(std::span<const TrainingRecord> records, std::span<const std::string> expected_queries,
                            double band_low, double band_high) {
  if (records.empty()) throw PreconditionError("audit_balance: no records");
  if (!(band_low >= 0.0 && band_low <= band_high && band_high <= 1.0)) {
    throw PreconditionError("audit_balance: band must satisfy 0 <= low <= high <= 1");
  }
  auto outside = [&](std::size_t yes, std::size_t no) {
    const double f = static_cast<double>(yes) / static_cast<double>(yes + no);
    return f < band_low || f > band_high;
  };

  BalanceReport report;
  for (const auto& r : records) {
    const auto parsed = parse_pointwise_response(r.assistant, parse_variant(r.variant));
    auto& q = report.per_query[r.query_id];
    if (parsed.guess == Guess::yes) {
      ++report.yes;
      ++q.yes;
    } else {
      ++report.no;
      ++q.no;
    }
  }
  report.yes_fraction = static_cast<double>(report.yes) / static_cast<double>(records.size());
  report.flagged = outside(report.yes, report.no);
  for (auto& [qid, q] : report.per_query) q.flagged = outside(q.yes, q.no);
  for (const auto& qid : expected_queries) {
    if (!report.per_query.contains(qid)) report.empty_queries.push_back(qid);
  }
  if (report.flagged) log::warn("class_imbalance", {{"yes_fraction", report.yes_fraction}});
  return report;
}

nlohmann::ordered_json to_json(const BalanceReport& report) {
  nlohmann::ordered_json j;
  j["yes"] = report.yes;
  j["no"] = report.no;
  j["yes_fraction"] = report.yes_fraction;
  j["flagged"] = report.flagged;
  nlohmann::ordered_json per_query = nlohmann::ordered_json::object();
  for (const auto& [qid, q] : report.per_query) {
    per_query[qid] = {{"yes", q.yes}, {"no", q.no}, {"flagged", q.flagged}};
  }
  j["per_query"] = std::move(per_query);
  j["empty_queries"] = report.empty_queries;
  return j;
}

}  // namespace relann
