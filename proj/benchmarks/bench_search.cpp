#include <benchmark/benchmark.h>

#include "memetect/local_index.hpp"
#include "memetect/ocr.hpp"
#include "memetect/protocol.hpp"
#include "memetect/synth.hpp"

namespace {

struct Corpus {
  std::vector<memetect::synth::Item> items = memetect::synth::corpus(7);
  std::shared_ptr<const memetect::TextExtractor> ocr = memetect::make_text_extractor("glyph");
  memetect::LocalIndex index;
  Corpus() {
    std::vector<memetect::LocalIndexEntry> entries;
    for (const auto& it : items) entries.push_back(memetect::make_entry(it.id, it.image, *ocr));
    index = memetect::LocalIndex(std::move(entries));
    for (const auto& it : items) index.attach_image(it.id, it.image);
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

void BM_ImageSearch(benchmark::State& state) {
  const auto& c = corpus();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& item = c.items[i++ % c.items.size()];
    benchmark::DoNotOptimize(c.index.image_search(item.image, memetect::kDefaultResults));
  }
}
BENCHMARK(BM_ImageSearch)->Unit(benchmark::kMillisecond);

void BM_ProtocolRun(benchmark::State& state) {
  const auto& c = corpus();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& item = c.items[(i += 37) % c.items.size()];
    benchmark::DoNotOptimize(memetect::run_protocol(item.id, item.image, c.index, *c.ocr));
  }
}
BENCHMARK(BM_ProtocolRun)->Unit(benchmark::kMillisecond);

}  // namespace
