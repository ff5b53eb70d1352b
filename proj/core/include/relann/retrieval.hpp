// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relann/corpus.hpp"
#include "relann/gateway.hpp"

namespace relann {

struct RankingEntry {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const RankingEntry&, const RankingEntry&) = default;
};

// Entries sorted by score descending, ties by doc id.
struct Ranking {
  std::string query_id;
  std::vector<RankingEntry> entries;

  friend bool operator==(const Ranking&, const Ranking&) = default;
};

// Throws PreconditionError on a dimension mismatch or an all-zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Sorts in place by score descending, then doc id.
void sort_ranking(Ranking& ranking);

// Embeds the query and every chunk through the gateway and ranks chunks by
// cosine similarity.
Ranking rank_documents(const Query& query, std::span<const DocumentChunk> chunks, Gateway& gateway);

// Throws PreconditionError when k == 0.
std::vector<std::string> retrieve_top_k(const Ranking& ranking, std::size_t k);

// Ids with score >= theta, by score descending then doc id.
std::vector<std::string> retrieve_by_threshold(std::span<const std::pair<std::string, double>> scores, double theta);

// rankings.jsonl: {"query_id","entries":[["doc_id",score],...]}
std::vector<Ranking> read_rankings(const std::filesystem::path& path);
void write_rankings(const std::filesystem::path& path, std::span<const Ranking> rankings);

}  // namespace relann
