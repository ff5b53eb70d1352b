// SPDX-License-Identifier: Apache-2.0
#include "relann/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "relann/errors.hpp"
#include "relann/jsonl.hpp"

namespace relann {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw PreconditionError("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void sort_ranking(Ranking& ranking) {
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const RankingEntry& a, const RankingEntry& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
}

Ranking rank_documents(const Query& query, std::span<const DocumentChunk> chunks, Gateway& gateway) {
  if (chunks.empty()) throw PreconditionError("rank_documents: no chunks for query " + query.id);
  std::vector<std::string> texts;
  texts.reserve(chunks.size() + 1);
  texts.push_back(query.text);
  for (const auto& c : chunks) texts.push_back(c.text);
  const auto emb = gateway.embed(texts);

  Ranking r;
  r.query_id = query.id;
  r.entries.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    r.entries.push_back({chunks[i].id, cosine_similarity(emb.vectors[0], emb.vectors[i + 1])});
  }
  sort_ranking(r);
  return r;
}

std::vector<std::string> retrieve_top_k(const Ranking& ranking, std::size_t k) {
  if (k == 0) throw PreconditionError("retrieve_top_k: k must be >= 1");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, ranking.entries.size()); ++i) out.push_back(ranking.entries[i].doc_id);
  return out;
}

std::vector<std::string> retrieve_by_threshold(std::span<const std::pair<std::string, double>> scores, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw PreconditionError("retrieve_by_threshold: theta outside [0, 1]");
  Ranking r;
  for (const auto& [id, s] : scores) {
    if (s >= theta) r.entries.push_back({id, s});
  }
  sort_ranking(r);
  std::vector<std::string> out;
  out.reserve(r.entries.size());
  for (auto& e : r.entries) out.push_back(std::move(e.doc_id));
  return out;
}

std::vector<Ranking> read_rankings(const std::filesystem::path& path) {
  std::vector<Ranking> out;
  jsonl::for_each_line(path, [&](const nlohmann::json& j, std::size_t line) {
    const std::string where = path.filename().string() + ":" + std::to_string(line);
    Ranking r;
    r.query_id = jsonl::require_string(j, "query_id", where);
    const auto it = j.find("entries");
    if (it == j.end() || !it->is_array()) throw SchemaError(where + ": \"entries\" must be an array");
    std::set<std::string> seen;
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number()) {
        throw SchemaError(where + ": each entry must be [\"doc_id\", score]");
      }
      RankingEntry entry{e[0].get<std::string>(), e[1].get<double>()};
      if (!seen.insert(entry.doc_id).second) throw SchemaError(where + ": duplicate doc_id " + entry.doc_id);
      r.entries.push_back(std::move(entry));
    }
    out.push_back(std::move(r));
  });
  return out;
}

void write_rankings(const std::filesystem::path& path, std::span<const Ranking> rankings) {
  std::vector<nlohmann::ordered_json> records;
  records.reserve(rankings.size());
  for (const auto& r : rankings) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : r.entries) entries.push_back(nlohmann::ordered_json::array({e.doc_id, e.score}));
    j["entries"] = std::move(entries);
    records.push_back(std::move(j));
  }
  jsonl::write_file(path, records);
}

}  // namespace relann
