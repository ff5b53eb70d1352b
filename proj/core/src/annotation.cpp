// SPDX-License-Identifier: Apache-2.0
#include "relann/annotation.hpp"

#include "relann/errors.hpp"
#include "relann/jsonl.hpp"

namespace relann {

std::string_view to_string(Calibration c) {
  switch (c) {
    case Calibration::ask: return "ask";
    case Calibration::tok: return "tok";
    case Calibration::both: return "both";
  }
  return "unknown";
}

Calibration calibration_from_string(std::string_view s) {
  if (s == "ask") return Calibration::ask;
  if (s == "tok") return Calibration::tok;
  if (s == "both") return Calibration::both;
  throw PreconditionError("unknown calibration \"" + std::string(s) + "\" (ask, tok, both)");
}

std::string_view to_string(ConfidenceSource s) { return s == ConfidenceSource::ask ? "ask" : "tok"; }

ConfidenceSource confidence_source_from_string(std::string_view s) {
  if (s == "ask") return ConfidenceSource::ask;
  if (s == "tok") return ConfidenceSource::tok;
  throw PreconditionError("unknown confidence source \"" + std::string(s) + "\" (ask, tok)");
}

double Annotation::confidence(ConfidenceSource source) const {
  const auto& value = source == ConfidenceSource::ask ? confidence_ask : confidence_tok;
  if (!value) {
    throw PreconditionError("annotation " + query_id + "/" + doc_id + " has no " + std::string(to_string(source)) +
                            " confidence");
  }
  return *value;
}

nlohmann::ordered_json to_json(const Annotation& a) {
  nlohmann::ordered_json j;
  j["query_id"] = a.query_id;
  j["doc_id"] = a.doc_id;
  j["guess"] = to_string(a.guess);
  if (a.confidence_ask) j["confidence_ask"] = *a.confidence_ask;
  if (a.confidence_tok) j["confidence_tok"] = *a.confidence_tok;
  j["relevance_score"] = a.relevance_score;
  if (a.reason) j["reason"] = *a.reason;
  j["model"] = a.model;
  j["variant"] = to_string(a.variant);
  return j;
}

Annotation annotation_from_json(const nlohmann::json& j, const std::string& where) {
  Annotation a;
  a.query_id = jsonl::require_string(j, "query_id", where);
  a.doc_id = jsonl::require_string(j, "doc_id", where);
  try {
    a.guess = parse_guess(jsonl::require_string(j, "guess", where));
    if (j.contains("confidence_ask")) a.confidence_ask = jsonl::require_number(j, "confidence_ask", where);
    if (j.contains("confidence_tok")) a.confidence_tok = jsonl::require_number(j, "confidence_tok", where);
    a.relevance_score = jsonl::require_number(j, "relevance_score", where);
    if (j.contains("reason")) a.reason = jsonl::require_string(j, "reason", where);
    a.model = j.contains("model") ? jsonl::require_string(j, "model", where) : std::string();
    a.variant = parse_variant(jsonl::require_string(j, "variant", where));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(where + ": " + e.what());
  }
  if (!a.confidence_ask && !a.confidence_tok) throw SchemaError(where + ": annotation carries no confidence");
  if (!(a.relevance_score >= 0.0 && a.relevance_score <= 1.0)) {
    throw SchemaError(where + ": relevance_score outside [0, 1]");
  }
  return a;
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
  std::vector<Annotation> out;
  jsonl::for_each_line(path, [&](const nlohmann::json& j, std::size_t line) {
    out.push_back(annotation_from_json(j, path.filename().string() + ":" + std::to_string(line)));
  });
  return out;
}

void write_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations) {
  std::vector<nlohmann::ordered_json> records;
  records.reserve(annotations.size());
  for (const auto& a : annotations) records.push_back(to_json(a));
  jsonl::write_file(path, records);
}

}  // namespace relann
