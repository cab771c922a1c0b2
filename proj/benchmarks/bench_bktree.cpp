#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "memetect/bktree.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/random.hpp"

namespace {

std::vector<std::uint64_t> hashes(std::size_t n) {
  memetect::SplitMix64 rng(1);
  std::vector<std::uint64_t> out(n);
  for (auto& h : out) h = rng.next();
  return out;
}

void BM_BkTreeNearest(benchmark::State& state) {
  const auto hs = hashes(static_cast<std::size_t>(state.range(0)));
  memetect::BkTree tree;
  for (std::uint32_t i = 0; i < hs.size(); ++i) tree.insert(hs[i], i);
  memetect::SplitMix64 rng(2);
  std::size_t visits = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.nearest(rng.next(), 50));
    visits += tree.last_visits();
  }
  state.counters["visits"] = benchmark::Counter(static_cast<double>(visits), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_BkTreeNearest)->Range(1 << 10, 1 << 16);

void BM_BruteForceNearest(benchmark::State& state) {
  const auto hs = hashes(static_cast<std::size_t>(state.range(0)));
  memetect::SplitMix64 rng(2);
  std::vector<std::pair<int, std::uint32_t>> scratch(hs.size());
  for (auto _ : state) {
    const auto q = rng.next();
    for (std::uint32_t i = 0; i < hs.size(); ++i) scratch[i] = {memetect::hamming(q, hs[i]), i};
    std::partial_sort(scratch.begin(), scratch.begin() + 50, scratch.end());
    benchmark::DoNotOptimize(scratch.data());
  }
}
BENCHMARK(BM_BruteForceNearest)->Range(1 << 10, 1 << 16);

void BM_BkTreeWithinRadius(benchmark::State& state) {
  const auto hs = hashes(1 << 16);
  memetect::BkTree tree;
  for (std::uint32_t i = 0; i < hs.size(); ++i) tree.insert(hs[i], i);
  memetect::SplitMix64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(tree.within(rng.next(), static_cast<int>(state.range(0))));
}
BENCHMARK(BM_BkTreeWithinRadius)->DenseRange(2, 10, 4);

}  // namespace
