// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <relann/prompting.hpp>

using namespace relann;

namespace {

void BM_ParsePointwise(benchmark::State& state) {
  const auto variant = parse_variant("point-cot-ask-d");
  const std::string text =
      "[Reason]: The passage reports scope 3 emissions by category.\n[Guess]: Yes\n[Confidence]: 0.92";
  for (auto _ : state) benchmark::DoNotOptimize(parse_pointwise_response(text, variant));
}
BENCHMARK(BM_ParsePointwise);

void BM_ParseListwise(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::string text;
  for (std::size_t i = n; i >= 1; --i) text += "[" + std::to_string(i) + "]" + (i > 1 ? " > " : "");
  for (auto _ : state) benchmark::DoNotOptimize(parse_listwise_response(text, n));
}
BENCHMARK(BM_ParseListwise)->Arg(2)->Arg(20);

void BM_RenderPointwise(benchmark::State& state) {
  const auto variant = parse_variant("point-ask-d");
  const Query q{"q", "What are the company's scope 3 emissions?",
                RelevanceDefinition{"The question asks about indirect value-chain emissions.",
                                    {"Total scope 3 emissions", "Category breakdowns"},
                                    DefinitionProvenance::generated}};
  const DocumentChunk chunk{"d", "r", std::string(600, 'x'), 1};
  for (auto _ : state) benchmark::DoNotOptimize(render_pointwise_prompt(q, &*q.definition, chunk, variant));
}
BENCHMARK(BM_RenderPointwise);

}  // namespace
