// SPDX-License-Identifier: Apache-2.0
#include "relann/corpus_io.hpp"

#include "relann/errors.hpp"
#include "relann/jsonl.hpp"

namespace relann::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(DefinitionProvenance p) {
  switch (p) {
    case DefinitionProvenance::generated: return "generated";
    case DefinitionProvenance::improved: return "improved";
    case DefinitionProvenance::fixed: return "fixed";
    case DefinitionProvenance::human: return "human";
  }
  return "generated";
}

DefinitionProvenance provenance_from_string(std::string_view s) {
  if (s == "generated") return DefinitionProvenance::generated;
  if (s == "improved") return DefinitionProvenance::improved;
  if (s == "fixed") return DefinitionProvenance::fixed;
  if (s == "human") return DefinitionProvenance::human;
  throw SchemaError("unknown definition provenance \"" + std::string(s) + "\"");
}

std::string_view to_string(BinaryLabel b) {
  switch (b) {
    case BinaryLabel::relevant: return "relevant";
    case BinaryLabel::partial: return "partial";
    case BinaryLabel::irrelevant: return "irrelevant";
  }
  return "irrelevant";
}

BinaryLabel binary_from_string(std::string_view s) {
  if (s == "relevant") return BinaryLabel::relevant;
  if (s == "partial") return BinaryLabel::partial;
  if (s == "irrelevant") return BinaryLabel::irrelevant;
  throw SchemaError("unknown binary label \"" + std::string(s) + "\"");
}

std::string_view to_string(SplitSide s) {
  switch (s) {
    case SplitSide::train: return "train";
    case SplitSide::test: return "test";
    case SplitSide::unassigned: return "unassigned";
  }
  return "unassigned";
}

SplitSide split_side_from_string(std::string_view s) {
  if (s == "train") return SplitSide::train;
  if (s == "test") return SplitSide::test;
  if (s == "unassigned") return SplitSide::unassigned;
  throw SchemaError("unknown split side \"" + std::string(s) + "\"");
}

ordered_json to_json(const RelevanceDefinition& d) {
  ordered_json j;
  j["meaning"] = d.meaning;
  j["examples"] = d.examples;
  j["provenance"] = to_string(d.provenance);
  return j;
}

ordered_json to_json(const Query& q) {
  ordered_json j;
  j["id"] = q.id;
  j["text"] = q.text;
  if (q.definition) j["definition"] = to_json(*q.definition);
  return j;
}

ordered_json to_json(const DocumentChunk& c) {
  ordered_json j;
  j["id"] = c.id;
  j["report_id"] = c.report_id;
  j["text"] = c.text;
  j["token_count"] = c.token_count;
  return j;
}

ordered_json to_json(const GoldLabel& g) {
  ordered_json j;
  j["query_id"] = g.query_id;
  j["doc_id"] = g.doc_id;
  j["grade"] = g.grade;
  if (g.binary) j["binary"] = to_string(*g.binary);
  j["uncertain"] = g.uncertain;
  if (g.label) j["label"] = *g.label;
  return j;
}

ordered_json to_json(const QueryDocPair& p) {
  ordered_json j;
  j["query_id"] = p.query_id;
  j["doc_id"] = p.doc_id;
  if (p.retriever_rank) j["retriever_rank"] = *p.retriever_rank;
  j["split"] = to_string(p.split);
  return j;
}

ordered_json to_json(const Split& s) {
  ordered_json j;
  j["seed"] = s.seed;
  j["train_queries"] = s.train_queries;
  j["test_queries"] = s.test_queries;
  j["train_reports"] = s.train_reports;
  j["test_reports"] = s.test_reports;
  return j;
}

RelevanceDefinition definition_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": definition must be an object");
  RelevanceDefinition d;
  d.meaning = jsonl::require_string(j, "meaning", where);
  if (auto it = j.find("examples"); it != j.end()) {
    if (!it->is_array()) throw SchemaError(where + ": definition.examples must be an array");
    for (const auto& e : *it) {
      if (!e.is_string()) throw SchemaError(where + ": definition.examples must hold strings");
      d.examples.push_back(e.get<std::string>());
    }
  }
  if (auto it = j.find("provenance"); it != j.end()) {
    if (!it->is_string()) throw SchemaError(where + ": definition.provenance must be a string");
    d.provenance = provenance_from_string(it->get<std::string>());
  }
  return d;
}

Query query_from_json(const json& j, const std::string& where) {
  Query q;
  q.id = jsonl::require_string(j, "id", where);
  q.text = jsonl::require_string(j, "text", where);
  if (auto it = j.find("definition"); it != j.end() && !it->is_null()) {
    q.definition = definition_from_json(*it, where);
  }
  return q;
}

DocumentChunk chunk_from_json(const json& j, const std::string& where, const TokenCounter& counter) {
  DocumentChunk c;
  c.id = jsonl::require_string(j, "id", where);
  c.report_id = jsonl::require_string(j, "report_id", where);
  c.text = jsonl::require_string(j, "text", where);
  if (auto it = j.find("token_count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      throw SchemaError(where + ": token_count must be a nonnegative integer");
    }
    c.token_count = it->get<std::size_t>();
  } else {
    c.token_count = counter ? counter(c.text) : count_whitespace_tokens(c.text);
  }
  return c;
}

GoldLabel gold_from_json(const json& j, const std::string& where) {
  GoldLabel g;
  g.query_id = jsonl::require_string(j, "query_id", where);
  g.doc_id = jsonl::require_string(j, "doc_id", where);
  g.grade = jsonl::require_number(j, "grade", where);
  if (auto it = j.find("binary"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where + ": binary must be a string");
    g.binary = binary_from_string(it->get<std::string>());
  }
  if (auto it = j.find("uncertain"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw SchemaError(where + ": uncertain must be a boolean");
    g.uncertain = it->get<bool>();
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      g.label = it->get<std::string>();
    } else if (it->is_number_integer()) {
      g.label = std::to_string(it->get<long long>());
    } else {
      throw SchemaError(where + ": label must be a string or integer");
    }
  }
  return g;
}

QueryDocPair pair_from_json(const json& j, const std::string& where) {
  QueryDocPair p;
  p.query_id = jsonl::require_string(j, "query_id", where);
  p.doc_id = jsonl::require_string(j, "doc_id", where);
  if (auto it = j.find("retriever_rank"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 1) {
      throw SchemaError(where + ": retriever_rank must be a positive integer");
    }
    p.retriever_rank = it->get<int>();
  }
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where + ": split must be a string");
    p.split = split_side_from_string(it->get<std::string>());
  }
  return p;
}

Split split_from_json(const json& j) {
  Split s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_queries = j.at("train_queries").get<std::set<std::string>>();
    s.test_queries = j.at("test_queries").get<std::set<std::string>>();
    s.train_reports = j.at("train_reports").get<std::set<std::string>>();
    s.test_reports = j.at("test_reports").get<std::set<std::string>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("split: ") + e.what());
  }
  return s;
}

namespace {

template <typename T, typename F>
std::vector<T> read_all(const std::filesystem::path& path, F&& parse) {
  std::vector<T> out;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line) {
    out.push_back(parse(j, path.filename().string() + ":" + std::to_string(line)));
  });
  return out;
}

template <typename T>
void write_all(const std::filesystem::path& path, std::span<const T> items) {
  std::vector<ordered_json> records;
  records.reserve(items.size());
  for (const auto& item : items) records.push_back(to_json(item));
  jsonl::write_file(path, records);
}

}  // namespace

std::vector<Query> read_queries(const std::filesystem::path& path) {
  return read_all<Query>(path, query_from_json);
}

std::vector<DocumentChunk> read_documents(const std::filesystem::path& path, const TokenCounter& counter) {
  return read_all<DocumentChunk>(
      path, [&](const json& j, const std::string& where) { return chunk_from_json(j, where, counter); });
}

std::vector<GoldLabel> read_gold(const std::filesystem::path& path) {
  return read_all<GoldLabel>(path, gold_from_json);
}

std::vector<QueryDocPair> read_pairs(const std::filesystem::path& path) {
  return read_all<QueryDocPair>(path, pair_from_json);
}

Split read_split(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(jsonl::read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  return split_from_json(j);
}

void write_queries(const std::filesystem::path& path, std::span<const Query> queries) { write_all(path, queries); }
void write_documents(const std::filesystem::path& path, std::span<const DocumentChunk> chunks) {
  write_all(path, chunks);
}
void write_gold(const std::filesystem::path& path, std::span<const GoldLabel> gold) { write_all(path, gold); }
void write_pairs(const std::filesystem::path& path, std::span<const QueryDocPair> pairs) { write_all(path, pairs); }

void write_split(const std::filesystem::path& path, const Split& split) {
  jsonl::write_text(path, to_json(split).dump(2) + "\n");
}

}  // namespace relann::io
