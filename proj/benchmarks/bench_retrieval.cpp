#include <benchmark/benchmark.h>

#include <random>

#include "xmh/eval.hpp"
#include "xmh/retrieval.hpp"

namespace {

xmh::CodeMatrix random_codes(std::size_t bits, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  xmh::CodeMatrix c(bits, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < bits; ++i) c.set(i, j, coin(rng) ? 1 : -1);
  return c;
}

void BM_HammingDistance(benchmark::State& state) {
  const auto bits = static_cast<std::size_t>(state.range(0));
  const xmh::CodeMatrix c = random_codes(bits, 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(xmh::hamming_distance(c.column(0), c.column(1)));
}
BENCHMARK(BM_HammingDistance)->Arg(16)->Arg(64)->Arg(128)->Arg(512);

void BM_RankGallery(benchmark::State& state) {
  const auto bits = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const xmh::RetrievalIndex index(random_codes(bits, n, 2), std::vector<xmh::LabelSet>(n));
  const xmh::CodeMatrix query = random_codes(bits, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(xmh::rank_gallery(index, query.column(0)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RankGallery)->Args({16, 10000})->Args({128, 10000})->Args({128, 100000})->Unit(benchmark::kMicrosecond);

void BM_AveragePrecision(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<std::size_t> ranking(n);
  for (std::size_t i = 0; i < n; ++i) ranking[i] = i;
  std::shuffle(ranking.begin(), ranking.end(), rng);
  xmh::RelevanceJudgment rel(n);
  for (auto& r : rel) r = rng() % 8 == 0;
  rel[0] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(xmh::average_precision(ranking, rel));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

}  // namespace
