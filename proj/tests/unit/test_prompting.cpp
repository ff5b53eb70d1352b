// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include <relann/errors.hpp>
#include <relann/log.hpp>
#include <relann/prompting.hpp>

#include "generators.hpp"

using namespace relann;

namespace {

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

const Query kQuery{"q1", "What is the firm's Scope 3 emission?", std::nullopt};
const DocumentChunk kChunk{"d1", "r1", "Scope 3 emissions were 4.1 Mt CO2e in 2022.", 9};
const RelevanceDefinition kDefinition{"The question asks for the amount of indirect value-chain emissions.",
                                      {"Total Scope 3 figures", "Scope 3 category breakdowns"},
                                      DefinitionProvenance::generated};

PromptVariant variant(const char* name) { return parse_variant(name); }

bool is_permutation_of_n(const std::vector<std::size_t>& p, std::size_t n) {
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expected(n);
  std::iota(expected.begin(), expected.end(), 1);
  return sorted == expected;
}

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (const char* name : {"point-ask", "point-ask-d", "point-cot-ask-d", "point-prob-d", "point-cot-prob", "list",
                           "list-d"}) {
    EXPECT_EQ(to_string(parse_variant(name)), name);
  }
  EXPECT_THROW(parse_variant("point-tok"), PreconditionError);
}

TEST(Guess, Parse) {
  EXPECT_EQ(parse_guess("Yes"), Guess::yes);
  EXPECT_EQ(parse_guess("no"), Guess::no);
  EXPECT_THROW(parse_guess("maybe"), SchemaError);
}

TEST(DefinitionPrompt, Anchors) {
  const auto p = render_definition_prompt(kQuery.text);
  EXPECT_EQ(occurrences(p, kQuery.text), 1u);
  EXPECT_NE(p.find("Meaning of the question:"), std::string::npos);
  EXPECT_NE(p.find("Examples of information that the question is looking for:"), std::string::npos);
}

TEST(ImprovedDefinitionPrompt, ExamplesInOrderBetweenMarkers) {
  const std::vector<std::string> ex{"first example paragraph", "second example paragraph"};
  const auto p = render_improved_definition_prompt(kQuery.text, ex);
  const auto begin = p.find("[BEGIN");
  const auto end = p.find("[END");
  ASSERT_NE(begin, std::string::npos);
  ASSERT_NE(end, std::string::npos);
  const auto a = p.find(ex[0]);
  const auto b = p.find(ex[1]);
  EXPECT_LT(begin, a);
  EXPECT_LT(a, b);
  EXPECT_LT(b, end);
  EXPECT_THROW(render_improved_definition_prompt(kQuery.text, {}), PreconditionError);
}

TEST(PointwisePrompt, AskConfidence) {
  const auto p = render_pointwise_prompt(kQuery, &kDefinition, kChunk, variant("point-ask-d"));
  EXPECT_NE(p.find("Give your honest confidence score between 0.0 and 1.0"), std::string::npos);
  EXPECT_EQ(p.find("[Reason]"), std::string::npos);
  EXPECT_EQ(occurrences(p, kQuery.text), 1u);
  EXPECT_EQ(occurrences(p, kChunk.text), 1u);
  EXPECT_EQ(occurrences(p, kDefinition.meaning), 1u);
  for (const auto& e : kDefinition.examples) EXPECT_EQ(occurrences(p, e), 1u);
}

TEST(PointwisePrompt, AskProbability) {
  const auto p = render_pointwise_prompt(kQuery, &kDefinition, kChunk, variant("point-prob-d"));
  EXPECT_NE(p.find("[Probability Helpful]"), std::string::npos);
}

TEST(PointwisePrompt, CotAddsReasonLine) {
  const auto p = render_pointwise_prompt(kQuery, &kDefinition, kChunk, variant("point-cot-ask-d"));
  EXPECT_NE(p.find("[Reason]"), std::string::npos);
  EXPECT_LT(p.find("[Reason]"), p.find("[Guess]"));
}

TEST(PointwisePrompt, WithoutDefinition) {
  const auto p = render_pointwise_prompt(kQuery, nullptr, kChunk, variant("point-ask"));
  EXPECT_EQ(p.find(kDefinition.meaning), std::string::npos);
  EXPECT_EQ(occurrences(p, kQuery.text), 1u);
  EXPECT_THROW(render_pointwise_prompt(kQuery, nullptr, kChunk, variant("point-ask-d")), PreconditionError);
  EXPECT_THROW(render_pointwise_prompt(kQuery, &kDefinition, kChunk, variant("list-d")), PreconditionError);
}

TEST(PointwisePrompt, BracesInInputsAreNotExpanded) {
  const Query q{"q", "What about {paragraph} and {question}?", std::nullopt};
  const DocumentChunk c{"d", "r", "Text with {question} inside", 4};
  const auto p = render_pointwise_prompt(q, nullptr, c, variant("point-ask"));
  EXPECT_EQ(occurrences(p, q.text), 1u);
  EXPECT_EQ(occurrences(p, c.text), 1u);
}

TEST(FixedQaDefinition, Constant) {
  const auto d = render_fixed_qa_definition();
  EXPECT_NE(d.meaning.find("directly answer the <question>"), std::string::npos);
  EXPECT_EQ(d.provenance, DefinitionProvenance::fixed);
  EXPECT_EQ(d, render_fixed_qa_definition());
}

TEST(ListwisePrompt, Identifiers) {
  const std::vector<std::string> passages{"alpha passage", "beta passage", "gamma passage"};
  const auto p = render_listwise_prompt(kQuery, passages);
  for (std::size_t i = 0; i < passages.size(); ++i) {
    EXPECT_EQ(occurrences(p.user, "[" + std::to_string(i + 1) + "] " + passages[i]), 1u) << i;
  }
  EXPECT_EQ(occurrences(p.user, "\n[4] "), 0u);
  EXPECT_NE(p.system.find("You are RankLLM"), std::string::npos);
  for (const auto& x : passages) EXPECT_EQ(occurrences(p.user, x), 1u);
  EXPECT_EQ(p.user.find("background information that explains the query"), std::string::npos);
}

TEST(ListwisePrompt, WithDefinition) {
  const std::vector<std::string> passages{"alpha", "beta"};
  const auto p = render_listwise_prompt(kQuery, passages, &kDefinition);
  EXPECT_NE(p.user.find("background information that explains the query"), std::string::npos);
  EXPECT_EQ(occurrences(p.user, kDefinition.meaning), 1u);
}

TEST(ParsePointwise, Examples) {
  const auto a = parse_pointwise_response("[Guess]: Yes\n[Confidence]: 0.85", variant("point-ask-d"));
  EXPECT_EQ(a.guess, Guess::yes);
  EXPECT_DOUBLE_EQ(a.confidence, 0.85);

  const auto b = parse_pointwise_response("[Reason]: cites Scope 3 table\n[Guess]: No\n[Confidence]: 0.7",
                                          variant("point-cot-ask-d"));
  EXPECT_EQ(b.reason, "cites Scope 3 table");
  EXPECT_EQ(b.guess, Guess::no);
  EXPECT_DOUBLE_EQ(b.confidence, 0.7);

  EXPECT_THROW(parse_pointwise_response("[Guess]: maybe\n[Confidence]: 0.5", variant("point-ask-d")), ParseError);
  EXPECT_THROW(parse_pointwise_response("[Guess]: Yes", variant("point-ask-d")), ParseError);
}

TEST(ParsePointwise, LastOccurrenceWins) {
  const auto p = parse_pointwise_response(
      "[Reason]: the format is [Guess]: No then [Confidence]: 0.1\n[Guess]: Yes\n[Confidence]: 0.9",
      variant("point-cot-ask-d"));
  EXPECT_EQ(p.guess, Guess::yes);
  EXPECT_DOUBLE_EQ(p.confidence, 0.9);
}

TEST(ParsePointwise, ClampsWithWarning) {
  log::ScopedCapture cap;
  const auto p = parse_pointwise_response("[Guess]: Yes\n[Confidence]: 1.3", variant("point-ask-d"));
  EXPECT_DOUBLE_EQ(p.confidence, 1.0);
  EXPECT_EQ(cap.count("confidence_clamped"), 1u);
}

TEST(ParsePointwise, PercentAndPunctuation) {
  const auto p = parse_pointwise_response("[Guess]: **Yes**.\n[Confidence]: 85%", variant("point-ask-d"));
  EXPECT_EQ(p.guess, Guess::yes);
  EXPECT_DOUBLE_EQ(p.confidence, 0.85);
}

TEST(ParsePointwise, ProbabilityPhrasing) {
  const auto p = parse_pointwise_response("[Guess]: No\n[Probability Helpful]: 0.2", variant("point-prob-d"));
  EXPECT_EQ(p.guess, Guess::no);
  EXPECT_DOUBLE_EQ(*p.probability_helpful, 0.2);
  EXPECT_DOUBLE_EQ(p.confidence, 0.8);
}

TEST(ParsePointwise, MissingReasonWarns) {
  log::ScopedCapture cap;
  const auto p = parse_pointwise_response("[Guess]: Yes\n[Confidence]: 0.6", variant("point-cot-ask-d"));
  EXPECT_FALSE(p.reason.has_value());
  EXPECT_EQ(cap.count("reason_missing"), 1u);
}

TEST(FormatConfidence, ShortestWithFraction) {
  EXPECT_EQ(format_confidence(1.0), "1.0");
  EXPECT_EQ(format_confidence(0.0), "0.0");
  EXPECT_EQ(format_confidence(0.85), "0.85");
  EXPECT_EQ(format_confidence(0.9), "0.9");
}

TEST(PointwiseRoundTrip, RandomTriples) {
  gen::Gen g(17);
  const PromptVariant variants[] = {variant("point-ask-d"), variant("point-cot-ask-d"), variant("point-prob-d"),
                                    variant("point-cot-prob")};
  for (int t = 0; t < 2000; ++t) {
    const auto& v = variants[t % 4];
    ParsedPointwise p;
    p.guess = g.coin() ? Guess::yes : Guess::no;
    const double c = g.coin(0.1) ? static_cast<double>(g.integer(0, 1)) : g.unit();
    if (v.confidence_phrasing == ConfidencePhrasing::ask_probability) {
      p.probability_helpful = c;
      p.confidence = p.guess == Guess::yes ? c : 1.0 - c;
    } else {
      p.confidence = c;
    }
    if (v.cot) {
      std::string reason = g.text(60);
      std::replace(reason.begin(), reason.end(), '[', '(');
      while (!reason.empty() && reason.back() == ' ') reason.pop_back();
      while (!reason.empty() && reason.front() == ' ') reason.erase(reason.begin());
      if (reason.empty()) reason = "r";
      p.reason = reason;
    }
    EXPECT_EQ(parse_pointwise_response(format_pointwise_answer(p, v), v), p);
  }
}

TEST(ParseListwise, Examples) {
  EXPECT_EQ(parse_listwise_response("[4] > [2] > [1] > [3]", 4), (std::vector<std::size_t>{4, 2, 1, 3}));
  EXPECT_EQ(parse_listwise_response("[2] > [2] > [1]", 3), (std::vector<std::size_t>{2, 1, 3}));
  EXPECT_THROW(parse_listwise_response("no brackets", 2), ParseError);
  EXPECT_EQ(parse_listwise_response("[9] > [1]", 2), (std::vector<std::size_t>{1, 2}));
}

TEST(ParseListwise, FuzzedInputsYieldPermutations) {
  gen::Gen g(23);
  for (int t = 0; t < 3000; ++t) {
    const auto n = g.size(1, 20);
    std::string text = g.text(40);
    const auto ids = g.size(1, 25);
    for (std::size_t i = 0; i < ids; ++i) {
      text += "[" + std::to_string(g.integer(0, 30)) + "]" + (g.coin() ? " > " : g.text(5));
    }
    const auto p = parse_listwise_response(text, n);
    EXPECT_TRUE(is_permutation_of_n(p, n)) << text;
  }
}

TEST(ParseDefinition, NumberedExamples) {
  const auto d = parse_definition_response(
      "Meaning of the question: The question asks about scope 3.\n"
      "Examples of information that the question is looking for:\n1. Total scope 3\n2) Category breakdowns\n- Trends",
      DefinitionProvenance::generated);
  EXPECT_EQ(d.meaning, "The question asks about scope 3.");
  EXPECT_EQ(d.examples, (std::vector<std::string>{"Total scope 3", "Category breakdowns", "Trends"}));
  EXPECT_THROW(parse_definition_response("nothing useful", DefinitionProvenance::generated), ParseError);
}

TEST(Templates, VersionAndHashes) {
  EXPECT_EQ(template_version(), "v1");
  const auto hashes = template_hashes();
  EXPECT_GE(hashes.size(), 10u);
  for (const auto& [name, hash] : hashes) EXPECT_EQ(hash.size(), 64u) << name;
}
