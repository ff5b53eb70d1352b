// SPDX-License-Identifier: Apache-2.0
#include <set>

#include <gtest/gtest.h>

#include <relann/errors.hpp>
#include <relann/log.hpp>
#include <relann/sampler.hpp>

#include "fixtures.hpp"
#include "generators.hpp"

using namespace relann;
using relann::testing::TempDir;

namespace {

Ranking ranking_of(std::size_t n) {
  Ranking r;
  r.query_id = "q";
  for (std::size_t i = 0; i < n; ++i) r.entries.push_back({"d" + std::to_string(i), 1.0 / static_cast<double>(i + 1)});
  return r;
}

Annotation annotation(std::string q, std::string d, Guess guess, double conf) {
  Annotation a;
  a.query_id = std::move(q);
  a.doc_id = std::move(d);
  a.guess = guess;
  a.confidence_ask = conf;
  a.relevance_score = guess == Guess::yes ? conf : 1.0 - conf;
  a.model = "m";
  a.variant = parse_variant("point-ask-d");
  return a;
}

GoldLabel gold(std::string q, std::string d, BinaryLabel b) {
  GoldLabel g;
  g.query_id = std::move(q);
  g.doc_id = std::move(d);
  g.binary = b;
  g.grade = b == BinaryLabel::relevant ? 1.0 : b == BinaryLabel::partial ? 0.5 : 0.0;
  return g;
}

AuditedDisagreement audited(double conf, bool original_relevant, Verdict v) {
  Disagreement d{"q", "d", !original_relevant, original_relevant, conf, confidence_bin(conf)};
  return {d, v};
}

}  // namespace

TEST(BalancedSample, ExactBalance) {
  const auto r = balanced_sample(ranking_of(100), 10, 10, 40);
  ASSERT_EQ(r.pairs.size(), 20u);
  std::size_t inside = 0;
  for (const auto& p : r.pairs) inside += *p.retriever_rank <= 10 ? 1 : 0;
  EXPECT_EQ(inside, 10u);
  EXPECT_EQ(r.inside_shortfall + r.outside_shortfall, 0u);
}

TEST(BalancedSample, StrictShortfall) {
  log::ScopedCapture cap;
  const auto r = balanced_sample(ranking_of(60), 5, 30, 40, FillPolicy::strict);
  std::size_t inside = 0;
  for (const auto& p : r.pairs) inside += *p.retriever_rank <= 5 ? 1 : 0;
  EXPECT_EQ(inside, 5u);
  EXPECT_EQ(r.pairs.size() - inside, 30u);
  EXPECT_EQ(r.inside_shortfall, 25u);
  EXPECT_EQ(cap.count("sample_shortfall"), 1u);
}

TEST(BalancedSample, FillBorrowsFromOtherSide) {
  log::ScopedCapture quiet;
  const auto r = balanced_sample(ranking_of(60), 5, 30, 40, FillPolicy::fill);
  EXPECT_EQ(r.pairs.size(), 60u);
}

TEST(BalancedSample, DeterministicUniqueAndFromRanking) {
  gen::Gen g(41);
  for (int t = 0; t < 200; ++t) {
    const auto n = g.size(1, 80);
    const auto k = g.size(1, 20);
    const auto per = g.size(1, 20);
    const auto seed = g.engine()();
    log::ScopedCapture quiet;
    const auto r = ranking_of(n);
    const auto a = balanced_sample(r, k, per, seed);
    EXPECT_EQ(a.pairs, balanced_sample(r, k, per, seed).pairs);
    std::set<std::string> seen;
    for (const auto& p : a.pairs) {
      EXPECT_TRUE(seen.insert(p.doc_id).second);
      EXPECT_EQ(r.entries[static_cast<std::size_t>(*p.retriever_rank - 1)].doc_id, p.doc_id);
    }
  }
}

TEST(BalancedSample, RejectsDegenerateInput) {
  EXPECT_THROW(balanced_sample(ranking_of(0), 1, 1, 1), PreconditionError);
  EXPECT_THROW(balanced_sample(ranking_of(5), 0, 1, 1), PreconditionError);
}

TEST(DeriveSeed, DependsOnKey) {
  EXPECT_EQ(derive_seed(40, "q1"), derive_seed(40, "q1"));
  EXPECT_NE(derive_seed(40, "q1"), derive_seed(40, "q2"));
  EXPECT_NE(derive_seed(40, "q1"), derive_seed(41, "q1"));
}

TEST(ConfidenceBin, HalfOpen) {
  EXPECT_EQ(confidence_bin(0.5), ConfidenceBin::lt90);
  EXPECT_EQ(confidence_bin(0.9), ConfidenceBin::b90_95);
  EXPECT_EQ(confidence_bin(0.95), ConfidenceBin::b95_98);
  EXPECT_EQ(confidence_bin(0.98), ConfidenceBin::b98_100);
  EXPECT_EQ(confidence_bin(1.0), ConfidenceBin::b98_100);
}

TEST(Stratify, TwoHundredFromFullBins) {
  std::vector<Annotation> anns;
  const double confs[] = {0.8, 0.92, 0.96, 0.99};
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < 70; ++i) {
      anns.push_back(annotation("q", "b" + std::to_string(b) + "-" + std::to_string(i), Guess::yes, confs[b]));
    }
  }
  const auto out = stratify_disagreements(anns, {}, 50, 40);  // no originals: all count as irrelevant
  EXPECT_EQ(out.size(), 200u);
  std::array<int, 4> per{};
  for (const auto& d : out) {
    ++per[static_cast<std::size_t>(d.bin)];
    EXPECT_EQ(d.bin, confidence_bin(d.confidence));
  }
  for (int c : per) EXPECT_EQ(c, 50);
  EXPECT_EQ(out, stratify_disagreements(anns, {}, 50, 40));
}

TEST(Stratify, OnlyDisagreements) {
  const std::vector<Annotation> anns{annotation("q", "a", Guess::yes, 0.9), annotation("q", "b", Guess::no, 0.9),
                                     annotation("q", "c", Guess::no, 0.97)};
  const std::vector<GoldLabel> orig{gold("q", "a", BinaryLabel::partial), gold("q", "b", BinaryLabel::irrelevant),
                                    gold("q", "c", BinaryLabel::relevant)};
  log::ScopedCapture quiet;
  const auto out = stratify_disagreements(anns, orig, 50, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].doc_id, "c");
  EXPECT_TRUE(out[0].original_relevant);
  EXPECT_FALSE(out[0].model_relevant);
  const std::vector<Annotation> agree{annotation("q", "a", Guess::yes, 0.9)};
  EXPECT_TRUE(stratify_disagreements(agree, orig, 50, 1).empty());
}

TEST(AccuracyTable, HandCount) {
  const std::vector<AuditedDisagreement> items{audited(0.99, false, Verdict::model), audited(0.97, false, Verdict::original),
                                               audited(0.80, true, Verdict::model), audited(0.96, true, Verdict::model)};
  const auto t = disagreement_accuracy_table(items);
  EXPECT_EQ(t.cells[0][1].n, 3u);
  EXPECT_NEAR(*t.cells[0][1].percent, 200.0 / 3.0, 1e-9);
  EXPECT_EQ(t.cells[0][0].n, 1u);
  EXPECT_DOUBLE_EQ(*t.cells[0][0].percent, 100.0);
  EXPECT_DOUBLE_EQ(*t.cells[1][1].percent, 100.0);
  EXPECT_DOUBLE_EQ(*t.cells[2][1].percent, 50.0);
  EXPECT_FALSE(t.cells[2][0].percent.has_value());
}

TEST(AccuracyTable, NinetyOnePointThree) {
  std::vector<AuditedDisagreement> items;
  for (int i = 0; i < 23; ++i) items.push_back(audited(0.99, false, i < 21 ? Verdict::model : Verdict::original));
  const auto t = disagreement_accuracy_table(items);
  EXPECT_NEAR(*t.cells[2][1].percent, 91.30, 0.005);
}

TEST(AccuracyTable, AllForModel) {
  std::vector<AuditedDisagreement> items;
  for (double c : {0.5, 0.99}) {
    for (bool rel : {true, false}) items.push_back(audited(c, rel, Verdict::model));
  }
  const auto t = disagreement_accuracy_table(items);
  for (const auto& row : t.cells) {
    for (const auto& cell : row) EXPECT_DOUBLE_EQ(*cell.percent, 100.0);
  }
}

TEST(AccuracyTable, CorpusFraction) {
  const std::vector<Annotation> corpus{annotation("q", "a", Guess::yes, 0.99), annotation("q", "b", Guess::no, 0.5)};
  const auto t = disagreement_accuracy_table({}, 0.95, corpus);
  EXPECT_DOUBLE_EQ(*t.corpus_fraction_above, 0.5);
}

TEST(DisagreementIo, RoundTripAndVerdicts) {
  TempDir tmp;
  const std::vector<Disagreement> items{{"q", "a", true, false, 0.97, ConfidenceBin::b95_98},
                                        {"q", "b", false, true, 0.5, ConfidenceBin::lt90}};
  write_disagreements(tmp / "d.jsonl", items);
  EXPECT_EQ(read_disagreements(tmp / "d.jsonl"), items);

  relann::testing::write_file(tmp / "v.jsonl", "{\"query_id\":\"q\",\"doc_id\":\"a\",\"verdict\":\"model\"}\n"
                                       "{\"query_id\":\"q\",\"doc_id\":\"b\",\"verdict\":\"original\"}\n");
  const auto joined = join_verdicts(items, tmp / "v.jsonl");
  ASSERT_EQ(joined.size(), 2u);
  EXPECT_EQ(joined[0].verdict, Verdict::model);
  EXPECT_EQ(joined[1].verdict, Verdict::original);

  relann::testing::write_file(tmp / "partial.jsonl", "{\"query_id\":\"q\",\"doc_id\":\"a\",\"verdict\":\"model\"}\n");
  EXPECT_THROW(join_verdicts(items, tmp / "partial.jsonl"), PreconditionError);
}
