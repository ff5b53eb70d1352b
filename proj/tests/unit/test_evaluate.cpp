// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <relann/errors.hpp>
#include <relann/evaluate.hpp>
#include <relann/log.hpp>

#include "generators.hpp"
#include "oracles.hpp"

using namespace relann;

namespace {

Annotation ann(std::string q, std::string d, Guess guess, double conf) {
  Annotation a;
  a.query_id = std::move(q);
  a.doc_id = std::move(d);
  a.guess = guess;
  a.confidence_ask = conf;
  a.relevance_score = guess == Guess::yes ? conf : 1.0 - conf;
  a.model = "m";
  a.variant = parse_variant("point-ask");
  return a;
}

GoldLabel gold(std::string q, std::string d, BinaryLabel b, bool uncertain = false) {
  GoldLabel g;
  g.query_id = std::move(q);
  g.doc_id = std::move(d);
  g.binary = b;
  g.grade = b == BinaryLabel::relevant ? 1.0 : b == BinaryLabel::partial ? 0.5 : 0.0;
  g.uncertain = uncertain;
  return g;
}

// Recomputes every dimension from the oracles, mirroring the joins the
// evaluator is documented to make.
struct Expected {
  double unc, bin, cal, info, avg;
};

Expected expected(const std::vector<Annotation>& anns, const std::vector<GoldLabel>& gold_rows, bool partial_relevant) {
  std::vector<double> conf, unc_scores;
  std::vector<bool> correct, uncertain;
  std::size_t tp = 0, fp = 0, fn = 0;
  metrics::RunAndGold run;
  for (const auto& a : anns) {
    const GoldLabel* g = nullptr;
    for (const auto& row : gold_rows) {
      if (row.query_id == a.query_id && row.doc_id == a.doc_id) g = &row;
    }
    const auto b = g ? *g->binary : BinaryLabel::irrelevant;
    const bool rel = b == BinaryLabel::relevant || (b == BinaryLabel::partial && partial_relevant);
    const bool yes = a.guess == Guess::yes;
    const double c = yes ? a.relevance_score : 1.0 - a.relevance_score;
    conf.push_back(c);
    correct.push_back(yes == rel);
    unc_scores.push_back(1.0 - c);
    uncertain.push_back(g && g->uncertain);
    tp += yes && rel;
    fp += yes && !rel;
    fn += !yes && rel;
    run[a.query_id].scores[a.doc_id] = a.relevance_score;
    run[a.query_id].gains[a.doc_id] = b == BinaryLabel::relevant ? 1.0 : b == BinaryLabel::partial ? 0.5 : 0.0;
  }
  Expected e{};
  e.unc = 100.0 * oracle::average_precision(unc_scores, uncertain);
  e.bin = 100.0 * (2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn));
  e.cal = 100.0 * (oracle::auroc(conf, correct) + (1.0 - oracle::ece(conf, correct, 10)) +
                   (1.0 - oracle::brier(conf, correct))) /
          3.0;
  e.info = 100.0 * (oracle::ndcg(run, std::nullopt) + oracle::map(run, std::nullopt)) / 2.0;
  e.avg = (e.unc + e.bin + e.cal + e.info) / 4.0;
  return e;
}

}  // namespace

TEST(Evaluate, HandFixture) {
  const std::vector<Annotation> anns{ann("q", "d1", Guess::yes, 0.9), ann("q", "d2", Guess::yes, 0.6),
                                     ann("q", "d3", Guess::no, 0.8), ann("q", "d4", Guess::no, 0.7)};
  const std::vector<GoldLabel> g{gold("q", "d1", BinaryLabel::relevant), gold("q", "d2", BinaryLabel::irrelevant, true),
                                 gold("q", "d3", BinaryLabel::partial, true), gold("q", "d4", BinaryLabel::irrelevant)};
  const auto e = evaluate_annotations(anns, g);
  EXPECT_NEAR(*e.bin, 50.0, 1e-9);
  const auto x = expected(anns, g, true);
  EXPECT_NEAR(*e.unc, x.unc, 1e-9);
  EXPECT_NEAR(*e.cal, x.cal, 1e-9);
  EXPECT_NEAR(*e.info, x.info, 1e-9);
  EXPECT_NEAR(*e.avg, x.avg, 1e-9);
  EXPECT_EQ(e.pairs, 4u);

  EvaluateOptions strict;
  strict.partial_policy = metrics::PartialPolicy::as_irrelevant;
  const auto s = evaluate_annotations(anns, g, strict);
  EXPECT_NEAR(*s.bin, expected(anns, g, false).bin, 1e-9);
}

TEST(Evaluate, MatchesOracleOnRandomCorpora) {
  gen::Gen g(71);
  log::ScopedCapture quiet;
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<Annotation> anns;
    std::vector<GoldLabel> gold_rows;
    const auto queries = g.size(1, 4);
    for (std::size_t q = 0; q < queries; ++q) {
      const auto docs = g.size(1, 7);
      for (std::size_t d = 0; d < docs; ++d) {
        const auto qid = "q" + std::to_string(q);
        const auto did = "d" + std::to_string(d);
        anns.push_back(ann(qid, did, g.coin() ? Guess::yes : Guess::no, g.score()));
        if (g.unit() < 0.9) {
          const auto pick = g.integer(0, 2);
          const auto b = pick == 0 ? BinaryLabel::relevant : pick == 1 ? BinaryLabel::partial : BinaryLabel::irrelevant;
          gold_rows.push_back(gold(qid, did, b, g.coin()));
        }
      }
    }
    const auto e = evaluate_annotations(anns, gold_rows);
    if (!e.avg) continue;
    const auto x = expected(anns, gold_rows, true);
    EXPECT_NEAR(*e.unc, x.unc, 1e-9);
    EXPECT_NEAR(*e.bin, x.bin, 1e-9);
    EXPECT_NEAR(*e.cal, x.cal, 1e-9);
    EXPECT_NEAR(*e.info, x.info, 1e-9);
    EXPECT_NEAR(*e.avg, x.avg, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Evaluate, UnlabeledPolicies) {
  const std::vector<Annotation> anns{ann("q", "d1", Guess::yes, 0.9), ann("q", "d2", Guess::yes, 0.8),
                                     ann("q", "d3", Guess::no, 0.7)};
  const std::vector<GoldLabel> g{gold("q", "d1", BinaryLabel::relevant), gold("q", "d3", BinaryLabel::irrelevant),
                                 gold("q", "d9", BinaryLabel::relevant)};
  log::ScopedCapture cap;
  const auto as_irrelevant = evaluate_annotations(anns, g);
  EXPECT_EQ(as_irrelevant.pairs, 3u);
  EXPECT_EQ(as_irrelevant.unlabeled_pairs, 1u);
  EXPECT_EQ(as_irrelevant.gold_without_annotation, 1u);
  EXPECT_NEAR(*as_irrelevant.bin, 100.0 * 2.0 / 3.0, 1e-9);

  EvaluateOptions skip;
  skip.unlabeled = UnlabeledPolicy::skip;
  const auto skipped = evaluate_annotations(anns, g, skip);
  EXPECT_EQ(skipped.pairs, 2u);
  EXPECT_NEAR(*skipped.bin, 100.0, 1e-9);
  EXPECT_EQ(cap.count("gold_without_annotation"), 2u);
}

TEST(Evaluate, UndefinedMetricsAreReported) {
  const std::vector<Annotation> anns{ann("q", "d1", Guess::yes, 0.9), ann("q", "d2", Guess::no, 0.8)};
  const std::vector<GoldLabel> g{gold("q", "d1", BinaryLabel::relevant), gold("q", "d2", BinaryLabel::irrelevant)};
  log::ScopedCapture cap;
  const auto e = evaluate_annotations(anns, g);
  EXPECT_FALSE(e.unc.has_value());  // no uncertain gold rows
  EXPECT_FALSE(e.cal.has_value());  // every guess correct: single-class AUROC
  EXPECT_FALSE(e.avg.has_value());
  EXPECT_TRUE(e.info.has_value());
  EXPECT_TRUE(e.undefined.contains("ap"));
  EXPECT_TRUE(e.undefined.contains("auroc"));
  const auto j = to_json(e, EvaluateOptions{});
  EXPECT_TRUE(j["avg"].is_null());
  EXPECT_EQ(j["settings"]["scheme"], "three_way");
}

TEST(Evaluate, ConfidenceSourceSelection) {
  auto a = ann("q", "d1", Guess::yes, 0.9);
  a.confidence_tok = 0.6;
  a.relevance_score = 0.6;
  auto b = ann("q", "d2", Guess::no, 0.8);
  const std::vector<Annotation> anns{a, b};
  const std::vector<GoldLabel> g{gold("q", "d1", BinaryLabel::relevant), gold("q", "d2", BinaryLabel::irrelevant)};
  log::ScopedCapture quiet;
  EvaluateOptions ask;
  ask.confidence_source = ConfidenceSource::ask;
  EXPECT_NEAR(*evaluate_annotations(anns, g, ask).sub.brier, (0.01 + 0.04) / 2.0, 1e-12);
  EvaluateOptions tok;
  tok.confidence_source = ConfidenceSource::tok;
  EXPECT_THROW(evaluate_annotations(anns, g, tok), PreconditionError);  // d2 has no tok confidence
}

TEST(Evaluate, RejectsBadInput) {
  const std::vector<GoldLabel> g{gold("q", "d1", BinaryLabel::relevant)};
  EXPECT_THROW(evaluate_annotations({}, g), PreconditionError);
  const std::vector<Annotation> dup{ann("q", "d1", Guess::yes, 0.9), ann("q", "d1", Guess::yes, 0.9)};
  EXPECT_THROW(evaluate_annotations(dup, g), PreconditionError);
  const std::vector<GoldLabel> dup_gold{g[0], g[0]};
  const std::vector<Annotation> one{ann("q", "d1", Guess::yes, 0.9)};
  EXPECT_THROW(evaluate_annotations(one, dup_gold), PreconditionError);
}

TEST(Evaluate, GainSources) {
  EXPECT_EQ(gain_source_from_string("graded_1_3"), GainSource::graded_1_3);
  EXPECT_EQ(to_string(GainSource::grade), "grade");
  EXPECT_THROW(gain_source_from_string("five_way"), PreconditionError);
}
