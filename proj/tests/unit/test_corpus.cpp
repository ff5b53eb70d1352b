// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include <relann/corpus.hpp>
#include <relann/corpus_io.hpp>
#include <relann/errors.hpp>
#include <relann/log.hpp>

#include "fixtures.hpp"
#include "generators.hpp"

using namespace relann;
using relann::testing::TempDir;

namespace {

std::vector<DocumentChunk> chunks_with_counts(const std::vector<std::size_t>& counts, const std::string& report = "r") {
  std::vector<DocumentChunk> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::string text;
    for (std::size_t t = 0; t < counts[i]; ++t) text += (t ? " w" : "w") + std::to_string(i);
    out.push_back({report + "-" + std::to_string(i), report, text, counts[i]});
  }
  return out;
}

std::vector<std::size_t> counts_of(const std::vector<DocumentChunk>& chunks) {
  std::vector<std::size_t> out;
  for (const auto& c : chunks) out.push_back(c.token_count);
  return out;
}

std::vector<std::string> ids(std::size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

TEST(WhitespaceTokens, Counts) {
  EXPECT_EQ(count_whitespace_tokens(""), 0u);
  EXPECT_EQ(count_whitespace_tokens("  a  b\tc\n"), 3u);
}

TEST(MergeShortChunks, AlreadyLongEnough) {
  const auto in = chunks_with_counts({150, 200});
  const auto out = merge_short_chunks(in, 120);
  EXPECT_EQ(out.chunks, in);
  EXPECT_TRUE(out.short_chunks.empty());
}

TEST(MergeShortChunks, GreedyAccumulation) {
  const auto out = merge_short_chunks(chunks_with_counts({50, 60, 40, 200}), 120);
  EXPECT_EQ(counts_of(out.chunks), (std::vector<std::size_t>{150, 200}));
  EXPECT_EQ(out.chunks[0].id, "r-0+r-1+r-2");
  EXPECT_EQ(out.chunks[0].token_count, count_whitespace_tokens(out.chunks[0].text));
}

TEST(MergeShortChunks, SingleShortChunkIsFlagged) {
  log::ScopedCapture cap;
  const auto out = merge_short_chunks(chunks_with_counts({80}), 120);
  EXPECT_EQ(counts_of(out.chunks), (std::vector<std::size_t>{80}));
  EXPECT_EQ(out.short_chunks, (std::vector<std::string>{"r-0"}));
  EXPECT_EQ(cap.count("short_chunk"), 1u);
}

TEST(MergeShortChunks, RestartsPerReport) {
  auto in = chunks_with_counts({50}, "a");
  const auto b = chunks_with_counts({50}, "b");
  in.insert(in.end(), b.begin(), b.end());
  log::ScopedCapture cap;
  const auto out = merge_short_chunks(in, 120);
  EXPECT_EQ(out.chunks.size(), 2u);
  EXPECT_EQ(out.short_chunks.size(), 2u);
}

TEST(MergeShortChunks, PreservesTextAndIsIdempotent) {
  gen::Gen g(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<DocumentChunk> in;
    const auto reports = g.size(1, 3);
    for (std::size_t r = 0; r < reports; ++r) {
      std::vector<std::size_t> counts(g.size(1, 6));
      for (auto& c : counts) c = g.size(1, 150);
      const auto part = chunks_with_counts(counts, "r" + std::to_string(r));
      in.insert(in.end(), part.begin(), part.end());
    }
    log::ScopedCapture quiet;
    const auto once = merge_short_chunks(in, 120);
    const auto twice = merge_short_chunks(once.chunks, 120);
    EXPECT_EQ(twice.chunks, once.chunks);

    auto join = [](const std::vector<DocumentChunk>& cs) {
      std::string s;
      for (const auto& c : cs) s += c.text + "\n";
      return s;
    };
    EXPECT_EQ(join(once.chunks), join(in));
    const auto total = [](const std::vector<DocumentChunk>& cs) {
      return std::accumulate(cs.begin(), cs.end(), std::size_t{0},
                             [](std::size_t a, const DocumentChunk& c) { return a + c.token_count; });
    };
    EXPECT_EQ(total(once.chunks), total(in));
  }
}

TEST(MergeShortChunks, RejectsZeroThreshold) { EXPECT_THROW(merge_short_chunks({}, 0), PreconditionError); }

TEST(Split, ReferenceSizes) {
  const auto q = ids(31, "q");
  const auto r = ids(80, "r");
  const auto s = split_train_test(q, r, 11.0 / 31.0, 30.0 / 80.0, 40);
  EXPECT_EQ(s.test_queries.size(), 11u);
  EXPECT_EQ(s.train_queries.size(), 20u);
  EXPECT_EQ(s.test_reports.size(), 30u);
  EXPECT_EQ(s.train_reports.size(), 50u);
  EXPECT_EQ(s, split_train_test(q, r, 11.0 / 31.0, 30.0 / 80.0, 40));
  EXPECT_NE(s, split_train_test(q, r, 11.0 / 31.0, 30.0 / 80.0, 41));
}

TEST(Split, DisjointAndCovering) {
  gen::Gen g(5);
  for (int t = 0; t < 300; ++t) {
    const auto q = ids(g.size(2, 40), "q");
    const auto r = ids(g.size(2, 40), "r");
    const auto s = split_train_test(q, r, 0.05 + 0.9 * g.unit(), 0.05 + 0.9 * g.unit(), g.engine()());
    for (const auto& x : s.test_queries) EXPECT_FALSE(s.train_queries.contains(x));
    for (const auto& x : s.test_reports) EXPECT_FALSE(s.train_reports.contains(x));
    EXPECT_EQ(s.test_queries.size() + s.train_queries.size(), q.size());
    EXPECT_EQ(s.test_reports.size() + s.train_reports.size(), r.size());
    EXPECT_FALSE(s.test_queries.empty());
    EXPECT_FALSE(s.train_queries.empty());
  }
}

TEST(Split, Classify) {
  Split s;
  s.train_queries = {"q1"};
  s.test_queries = {"q2"};
  s.train_reports = {"r1"};
  s.test_reports = {"r2"};
  EXPECT_EQ(s.classify("q1", "r1"), SplitSide::train);
  EXPECT_EQ(s.classify("q2", "r2"), SplitSide::test);
  EXPECT_EQ(s.classify("q1", "r2"), SplitSide::unassigned);
  EXPECT_EQ(s.classify("q2", "r1"), SplitSide::unassigned);
}

TEST(Split, TooSmallIsRejected) {
  const std::vector<std::string> one{"q"};
  const auto r = ids(4, "r");
  EXPECT_THROW(split_train_test(one, r, 0.5, 0.5, 1), PreconditionError);
}

TEST(Validate, FixtureCorpusIsOk) {
  const auto dir = relann::testing::data_dir() / "e2e";
  const auto report =
      validate_corpus(io::read_queries(dir / "queries.jsonl"), io::read_documents(dir / "documents.jsonl"),
                      io::read_gold(dir / "gold.jsonl"), count_whitespace_tokens);
  EXPECT_TRUE(report.ok());
}

TEST(Validate, Findings) {
  std::vector<Query> queries{{"q1", "text", std::nullopt}, {"q1", "again", std::nullopt}};
  std::vector<DocumentChunk> chunks{{"d1", "r", "some text", 2}};
  GoldLabel dangling;
  dangling.query_id = "q1";
  dangling.doc_id = "missing";
  dangling.grade = 1.0;
  const std::vector<GoldLabel> gold{dangling};
  const auto report = validate_corpus(queries, chunks, gold);
  EXPECT_EQ(report.count(FindingKind::duplicate_id), 1u);
  EXPECT_EQ(report.count(FindingKind::dangling_reference), 1u);
  EXPECT_FALSE(report.ok());
}

TEST(Validate, GradeAndLabelChecks) {
  std::vector<Query> queries{{"q1", "text", std::nullopt}};
  std::vector<DocumentChunk> chunks{{"d1", "r", "one two", 5}, {"d2", "r", "x", 1}};
  GoldLabel a;
  a.query_id = "q1";
  a.doc_id = "d1";
  a.grade = 1.5;
  GoldLabel b;
  b.query_id = "q1";
  b.doc_id = "d2";
  b.grade = 0.0;
  b.binary = BinaryLabel::relevant;
  const std::vector<GoldLabel> gold{a, b};
  const auto report = validate_corpus(queries, chunks, gold, count_whitespace_tokens);
  EXPECT_EQ(report.count(FindingKind::grade_out_of_range), 1u);
  EXPECT_EQ(report.count(FindingKind::inconsistent_label), 1u);
  EXPECT_EQ(report.count(FindingKind::token_count_mismatch), 1u);
}

TEST(CorpusIo, RoundTrip) {
  TempDir tmp;
  Query q{"q1", "What?", RelevanceDefinition{"meaning", {"e1", "e2"}, DefinitionProvenance::improved}};
  const std::vector<Query> queries{q, {"q2", "Other?", std::nullopt}};
  io::write_queries(tmp / "q.jsonl", queries);
  EXPECT_EQ(io::read_queries(tmp / "q.jsonl"), queries);

  const std::vector<DocumentChunk> chunks{{"d1", "r1", "alpha beta", 2}};
  io::write_documents(tmp / "d.jsonl", chunks);
  EXPECT_EQ(io::read_documents(tmp / "d.jsonl"), chunks);

  const std::vector<QueryDocPair> pairs{{"q1", "d1", 3, SplitSide::train}, {"q2", "d1", std::nullopt, SplitSide::test}};
  io::write_pairs(tmp / "p.jsonl", pairs);
  EXPECT_EQ(io::read_pairs(tmp / "p.jsonl"), pairs);

  const auto split = split_train_test(ids(5, "q"), ids(5, "r"), 0.4, 0.4, 9);
  io::write_split(tmp / "s.json", split);
  EXPECT_EQ(io::read_split(tmp / "s.json"), split);
}

TEST(CorpusIo, MissingTokenCountIsComputed) {
  TempDir tmp;
  relann::testing::write_file(tmp / "d.jsonl", R"({"id":"d","report_id":"r","text":"a b c"})"
                                       "\n");
  EXPECT_EQ(io::read_documents(tmp / "d.jsonl").front().token_count, 3u);
}

TEST(CorpusIo, SchemaViolationsNameTheLine) {
  TempDir tmp;
  relann::testing::write_file(tmp / "q.jsonl", "{\"id\":\"q1\",\"text\":\"ok\"}\n{\"id\":\"q2\"}\n");
  try {
    io::read_queries(tmp / "q.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  relann::testing::write_file(tmp / "bad.jsonl", "{not json\n");
  EXPECT_THROW(io::read_queries(tmp / "bad.jsonl"), SchemaError);
}

TEST(GoldLabel, EffectiveBinaryFallsBackToGrade) {
  GoldLabel g;
  g.grade = 0.5;
  EXPECT_EQ(g.effective_binary(), BinaryLabel::partial);
  g.grade = 1.0;
  EXPECT_EQ(g.effective_binary(), BinaryLabel::relevant);
  g.grade = 0.0;
  EXPECT_EQ(g.effective_binary(), BinaryLabel::irrelevant);
  g.binary = BinaryLabel::relevant;
  EXPECT_EQ(g.effective_binary(), BinaryLabel::relevant);
}
