// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <relann/corpus.hpp>
#include <relann/log.hpp>

using namespace relann;

namespace {

void BM_MergeShortChunks(benchmark::State& state) {
  std::vector<DocumentChunk> chunks;
  for (int i = 0; i < state.range(0); ++i) {
    const std::size_t n = 20 + static_cast<std::size_t>(i * 37 % 180);
    std::string text;
    for (std::size_t t = 0; t < n; ++t) text += t ? " w" : "w";
    chunks.push_back({"r" + std::to_string(i / 50) + "-" + std::to_string(i), "r" + std::to_string(i / 50), text, n});
  }
  log::set_sink([](log::Level, const nlohmann::json&) {});
  for (auto _ : state) benchmark::DoNotOptimize(merge_short_chunks(chunks, 120));
  log::set_sink({});
}
BENCHMARK(BM_MergeShortChunks)->Arg(1000);

}  // namespace
