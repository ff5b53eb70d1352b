// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relann/corpus.hpp"

// JSONL schemas for the corpus files:
//   queries.jsonl    {"id","text","definition":{"meaning","examples":[...],"provenance"}?}
//   documents.jsonl  {"id","report_id","text","token_count"?}
//   gold.jsonl       {"query_id","doc_id","grade","binary"?,"uncertain"?,"label"?}
//   pairs.jsonl      {"query_id","doc_id","retriever_rank"?,"split"}
//   split.json       {"seed","train_queries","test_queries","train_reports","test_reports"}
namespace relann::io {

std::string_view to_string(DefinitionProvenance p);
DefinitionProvenance provenance_from_string(std::string_view s);
std::string_view to_string(BinaryLabel b);
BinaryLabel binary_from_string(std::string_view s);
std::string_view to_string(SplitSide s);
SplitSide split_side_from_string(std::string_view s);

nlohmann::ordered_json to_json(const RelevanceDefinition& d);
nlohmann::ordered_json to_json(const Query& q);
nlohmann::ordered_json to_json(const DocumentChunk& c);
nlohmann::ordered_json to_json(const GoldLabel& g);
nlohmann::ordered_json to_json(const QueryDocPair& p);
nlohmann::ordered_json to_json(const Split& s);

RelevanceDefinition definition_from_json(const nlohmann::json& j, const std::string& where);
Query query_from_json(const nlohmann::json& j, const std::string& where);
// Missing token_count is filled in with `counter`.
DocumentChunk chunk_from_json(const nlohmann::json& j, const std::string& where, const TokenCounter& counter);
GoldLabel gold_from_json(const nlohmann::json& j, const std::string& where);
QueryDocPair pair_from_json(const nlohmann::json& j, const std::string& where);
Split split_from_json(const nlohmann::json& j);

std::vector<Query> read_queries(const std::filesystem::path& path);
std::vector<DocumentChunk> read_documents(const std::filesystem::path& path,
                                          const TokenCounter& counter = count_whitespace_tokens);
std::vector<GoldLabel> read_gold(const std::filesystem::path& path);
std::vector<QueryDocPair> read_pairs(const std::filesystem::path& path);
Split read_split(const std::filesystem::path& path);

void write_queries(const std::filesystem::path& path, std::span<const Query> queries);
void write_documents(const std::filesystem::path& path, std::span<const DocumentChunk> chunks);
void write_gold(const std::filesystem::path& path, std::span<const GoldLabel> gold);
void write_pairs(const std::filesystem::path& path, std::span<const QueryDocPair> pairs);
void write_split(const std::filesystem::path& path, const Split& split);

}  // namespace relann::io
