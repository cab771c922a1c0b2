#include <benchmark/benchmark.h>

#include "memetect/fingerprint.hpp"
#include "memetect/ocr.hpp"
#include "memetect/synth.hpp"

namespace {

void BM_Dhash(benchmark::State& state) {
  const auto img = memetect::synth::photo(1, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(memetect::dhash64(img));
}
BENCHMARK(BM_Dhash)->Arg(256)->Arg(1024);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto img = memetect::synth::photo(2);
  for (auto _ : state) benchmark::DoNotOptimize(memetect::extract_features(img));
}
BENCHMARK(BM_ExtractFeatures);

void BM_MatchFeatures(benchmark::State& state) {
  const auto a = memetect::extract_features(memetect::synth::photo(3));
  const auto b = memetect::extract_features(memetect::synth::photo(3).crop({20, 20, 200, 200}));
  for (auto _ : state) benchmark::DoNotOptimize(memetect::match_features(a, b));
}
BENCHMARK(BM_MatchFeatures);

void BM_GlyphOcr(benchmark::State& state) {
  auto img = memetect::synth::photo(4);
  memetect::synth::caption_top(img, "WHEN THE BENCHMARK");
  memetect::synth::caption_bottom(img, "FINALLY RUNS");
  const auto ocr = memetect::make_text_extractor("glyph");
  for (auto _ : state) benchmark::DoNotOptimize(ocr->extract(img));
}
BENCHMARK(BM_GlyphOcr);

}  // namespace
