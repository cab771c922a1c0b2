// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "fixtures.hpp"
#include "memetect/audit.hpp"
#include "memetect/errors.hpp"
#include "memetect/protocol.hpp"
#include "memetect/random.hpp"

using namespace memetect;
using memetect::testing::corpus;
using memetect::testing::corpus_entries;
using memetect::testing::glyph_ocr;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome_ {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool meme_label(const std::string& label) { return label != "nMIT" && label != "nMM"; }

Outcome_ synthetic_corpus() {
  const auto t0 = Clock::now();
  const auto& items = corpus();
  const auto index = testing::corpus_index();

  std::size_t type_ok = 0;
  std::map<std::string, bool> viral_families;  // family -> every member flagged
  std::map<std::string, std::pair<int, int>> binary;  // family kind -> (right, total)
  std::vector<std::string> misses;
  for (const auto& it : items) {
    const auto run = run_protocol(it.id, it.image, *index, glyph_ocr());
    const std::string got = run.verdict ? std::string(code(run.verdict->outcome)) : "aborted";
    const bool viral = run.verdict && run.verdict->viral_flag;
    if (got == it.label && viral == it.viral) {
      ++type_ok;
    } else {
      misses.push_back(it.id + "->" + got);
    }
    if (it.viral) {
      auto pos = viral_families.emplace(it.family, true).first;
      pos->second = pos->second && got == "nMIT" && viral;
    }
    const std::string kind = it.id.substr(0, it.id.find('-'));
    auto& b = binary[kind];
    b.second += 1;
    b.first += run.verdict && is_meme(run.verdict->outcome) == meme_label(it.label);
  }
  const double secs = seconds_since(t0);

  bool binary_ok = true;
  std::string binary_detail;
  for (const char* kind : {"cm", "fm", "mi", "mt", "nmm"}) {
    const auto [right, total] = binary[kind];
    binary_ok = binary_ok && right == total;
    binary_detail += fmt::format(" {}={}/{}", kind, right, total);
  }
  const auto virals = viral_families.size();
  const auto virals_ok = std::count_if(viral_families.begin(), viral_families.end(), [](const auto& f) { return f.second; });
  const double type_acc = static_cast<double>(type_ok) / static_cast<double>(items.size());
  const bool pass = binary_ok && type_acc >= 0.95 && virals == 30 && virals_ok == 30 && secs <= 300.0;
  std::string detail = fmt::format("meme/non-meme{}; type accuracy {}/{} ({:.1f}%); viral images {}/{} flagged nMIT (each reposted twice); {:.0f}s",
                                   binary_detail, type_ok, items.size(), 100.0 * type_acc, virals_ok, virals, secs);
  if (!misses.empty()) {
    detail += "; misses:";
    for (std::size_t i = 0; i < misses.size() && i < 8; ++i) detail += " " + misses[i];
  }
  return {pass, detail};
}

audit::Counts counts(std::initializer_list<std::size_t> v) {
  audit::Counts c{};
  std::copy(v.begin(), v.end(), c.begin());
  return c;
}

Outcome_ table_arithmetic() {
  // Rows as printed: CM FM MI TS MT nMIT nMM, then printed meme and non-meme totals.
  struct Printed {
    const char* name;
    audit::Counts c;
    double meme, nonmeme;
  };
  const std::vector<Printed> rows = {
      {"memo1", counts({33, 7, 7, 6, 2, 39, 6}), 55, 45},     {"memo2", counts({27, 19, 20, 9, 2, 21, 2}), 77, 23},
      {"hateful", counts({5, 0, 7, 3, 1, 80, 4}), 16, 84},    {"harmeme", counts({14, 6, 18, 6, 3, 48, 4}), 48, 52},
      {"propmeme", counts({15, 7, 9, 7, 3, 58, 2}), 41, 60},  {"totaldef", counts({10, 16, 10, 9, 4, 33, 18}), 49, 51},
      {"fersini", counts({20, 12, 18, 7, 3, 38, 0}), 62, 38},
  };
  const std::set<std::string> consistent = {"memo1", "memo2", "hateful", "totaldef"};
  const std::set<std::string> inconsistent = {"harmeme", "propmeme", "fersini"};

  bool totals_ok = true;
  std::string detail;
  for (const auto& r : rows) {
    if (!consistent.count(r.name)) continue;
    // Through the verdict path: expand the row into one verdict per sample.
    std::vector<std::optional<Outcome>> verdicts;
    for (auto o : kAllOutcomes) verdicts.insert(verdicts.end(), r.c[static_cast<std::size_t>(o)], o);
    const auto row = audit::aggregate(r.name, std::span<const std::optional<Outcome>>(verdicts), verdicts.size());
    const auto direct = audit::row_from_counts(r.name, r.c);
    const bool ok = static_cast<double>(row.meme_total) == r.meme && static_cast<double>(row.nonmeme_total) == r.nonmeme &&
                    direct.meme_total == row.meme_total && direct.nonmeme_total == row.nonmeme_total;
    totals_ok = totals_ok && ok;
    detail += fmt::format("{} {}/{}{} ", r.name, row.meme_total, row.nonmeme_total, ok ? "" : "(!)");
  }

  std::vector<audit::PublishedRow> published;
  for (const auto& r : rows) published.push_back({r.name, r.c, r.meme, r.nonmeme});
  const auto report = audit::ingest_published(published);
  const double avg = report.average_nonmeme_percent();
  const bool avg_ok = std::abs(avg - 50.4) <= 0.05 && audit::format_percent(avg) == "50.4";

  std::set<std::string> flagged;
  for (const auto& d : report.discrepancies) flagged.insert(d.dataset);
  const bool flags_ok = flagged == inconsistent;

  detail += fmt::format("; non-meme average {:.3f} -> {}; flagged:", avg, audit::format_percent(avg));
  for (const auto& f : flagged) detail += " " + f;
  return {totals_ok && avg_ok && flags_ok, detail};
}

audit::DatasetManifest skewed_manifest() {
  audit::DatasetManifest m;
  m.name = "skew";
  audit::Subset big{"big", {}}, small{"small", {}};
  for (int i = 0; i < 1000; ++i) big.files.push_back(fmt::format("big-{:04d}", i));
  for (int i = 0; i < 10; ++i) small.files.push_back(fmt::format("small-{:02d}", i));
  m.subsets = {big, small};
  return m;
}

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected, int df) {
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) stat += std::pow(observed[i] - expected[i], 2) / expected[i];
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

Outcome_ sampler() {
  const auto m = skewed_manifest();

  // Determinism, and agreement with vectors produced by an independent implementation.
  const auto a = audit::sample(m, 200, 0xDEADBEEF);
  const auto b = audit::sample(m, 200, 0xDEADBEEF);
  const bool same = audit::sample_to_json(a) == audit::sample_to_json(b);
  const std::vector<std::string> head = {"small-04", "small-06", "big-0175", "small-02", "small-08"};
  bool vectors = a.items.size() == 200;
  for (std::size_t i = 0; vectors && i < head.size(); ++i) vectors = a.items[i].file == head[i];
  const auto small_count = std::count_if(a.items.begin(), a.items.end(), [](const auto& e) { return e.subset == "small"; });
  vectors = vectors && small_count == 10;

  // Uniform-subset-first: the first ten draws cannot exhaust the small subset,
  // so the number of small picks among them is Binomial(10, 1/2).
  constexpr int kTrials = 10000;
  std::vector<double> hist(11, 0.0);
  std::vector<double> big_hits(1000, 0.0);
  for (int t = 0; t < kTrials; ++t) {
    const auto s = audit::sample(m, 200, static_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ULL + 1);
    int small = 0;
    for (int i = 0; i < 10; ++i) small += s.items[i].subset == "small";
    hist[small] += 1;
    for (const auto& e : s.items)
      if (e.subset == "big") big_hits[std::stoi(e.file.substr(4))] += 1;
  }
  std::vector<double> expected(11);
  const boost::math::binomial_distribution<> binom(10, 0.5);
  for (int i = 0; i <= 10; ++i) expected[i] = kTrials * boost::math::pdf(binom, i);
  const double p_subset = chi_square_p(hist, expected, 10);

  // Within a subset every file is equally likely.
  const double per_file = std::accumulate(big_hits.begin(), big_hits.end(), 0.0) / 1000.0;
  const double p_file = chi_square_p(big_hits, std::vector<double>(1000, per_file), 999);

  // The test has teeth: size-proportional sampling fails it.
  std::vector<double> prop_hist(11, 0.0);
  SplitMix64 rng(99);
  for (int t = 0; t < kTrials; ++t) {
    int small = 0;
    for (int i = 0; i < 10; ++i) small += rng.uniform_below(1010) < 10;
    prop_hist[small] += 1;
  }
  const double p_prop = chi_square_p(prop_hist, expected, 10);

  const bool pass = same && vectors && p_subset > 0.01 && p_file > 0.01 && p_prop < 0.01;
  return {pass, fmt::format("repeatable={} vectors={} subset chi2 p={:.3f} file chi2 p={:.3f} (proportional p={:.2g})",
                            same, vectors, p_subset, p_file, p_prop)};
}

Outcome_ hash_stage() {
  // 200 photos with text-free fingerprints; queries are fresh photos.
  std::vector<LocalIndexEntry> entries;
  for (int i = 0; i < 200; ++i) {
    LocalIndexEntry e;
    e.id = fmt::format("item-{:03d}", i);
    e.dhash = dhash64(synth::photo(1000 + i, 96, 96));
    entries.push_back(std::move(e));
  }
  // Add some exact and near hash ties to exercise ordering.
  for (int i = 0; i < 10; ++i) entries[190 + i].dhash = entries[i].dhash ^ (i % 2 ? 0 : 1ULL << i);
  const LocalIndex index(entries);

  int agree = 0;
  SplitMix64 rng(2024);
  for (int q = 0; q < 100; ++q) {
    const std::uint64_t qh = q % 2 ? dhash64(synth::photo(5000 + q, 96, 96)) : rng.next();
    std::vector<std::pair<int, std::uint32_t>> brute;
    for (std::uint32_t i = 0; i < entries.size(); ++i) brute.emplace_back(hamming(qh, entries[i].dhash), i);
    std::sort(brute.begin(), brute.end());
    brute.resize(50);
    const auto got = index.hash_stage(qh, 50);
    bool same = got.size() == brute.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].distance == brute[i].first && got[i].id == brute[i].second;
    }
    agree += same;
  }
  return {agree == 100, fmt::format("{}/100 queries identical to exhaustive ranking", agree)};
}

// A random composition drawn from every construction the generator knows.
RasterImage random_fixture(SplitMix64& rng) {
  const auto& items = corpus();
  const int size = rng.range(48, 200);
  const auto s = rng.next();
  switch (rng.uniform_below(12)) {
    case 0: return synth::photo(s, size, size);
    case 1: {
      auto img = synth::photo(s, 200, 200);
      synth::caption_top(img, synth::words(rng.next(), 2));
      return img;
    }
    case 2: {
      auto img = synth::photo(s, 200, rng.range(120, 220));
      synth::caption_top(img, synth::words(rng.next(), 2));
      synth::caption_bottom(img, synth::words(rng.next(), 2));
      return img;
    }
    case 3: return synth::with_whitespace(synth::photo(s, 200, 150), synth::words(rng.next(), 2), 0.25, rng.next() & 1);
    case 4: {
      std::vector<RasterImage> panels;
      const int n = rng.range(2, 3);
      for (int p = 0; p < n; ++p) {
        auto panel = synth::photo(rng.next(), 200, 90);
        if (rng.next() & 1) synth::caption_top(panel, synth::words(rng.next(), 1));
        panels.push_back(std::move(panel));
      }
      return synth::stack(panels);
    }
    case 5: {
      auto img = synth::photo(s, 220, 220);
      img.blit(synth::sticker(rng.next(), 80, 80), rng.range(0, 140), rng.range(40, 140));
      synth::caption_top(img, synth::words(rng.next(), 2));
      return img;
    }
    case 6: {
      std::vector<std::string> lines;
      for (int l = rng.range(1, 6); l > 0; --l) lines.push_back(synth::words(rng.next(), 2));
      return synth::text_only(lines, 200, 200);
    }
    case 7: {
      auto img = synth::noise(s, size + 20, size + 20);
      synth::caption_bottom(img, synth::words(rng.next(), 1), 1);
      return img;
    }
    case 8: {
      // Recaption an indexed item.
      auto img = items[rng.uniform_below(items.size())].image;
      synth::caption_bottom(img, synth::words(rng.next(), 2));
      return img;
    }
    case 9: return items[rng.uniform_below(items.size())].image;
    case 10: {
      const auto& src = items[rng.uniform_below(items.size())].image;
      const int w = rng.range(40, src.width()), h = rng.range(40, src.height());
      return src.crop({rng.range(0, src.width() - w), rng.range(0, src.height() - h), w, h});
    }
    default: return RasterImage(rng.range(1, 64), rng.range(1, 64), Rgba{static_cast<std::uint8_t>(s), 128, 128, 255});
  }
}

Outcome_ trace_fuzz() {
  const auto t0 = Clock::now();
  const auto index = testing::corpus_index();
  SplitMix64 rng(31337);
  int invalid = 0, errors = 0, interactive = 0;
  std::map<int, int> terminal_steps;
  std::string first_problem;
  for (int i = 0; i < 1000; ++i) {
    const RasterImage img = random_fixture(rng);
    const std::string id = fmt::format("fuzz-{:04d}", i);
    try {
      ProtocolTrace trace;
      if (i % 5 == 0) {
        // Interactive with random human decisions.
        ++interactive;
        ProtocolEngine engine(id, img, *index, glyph_ocr(), {}, Mode::Interactive);
        engine.advance();
        while (engine.status() == SessionStatus::AwaitingJudgement) {
          const auto& pending = engine.pending();
          auto it = std::find_if(pending.begin(), pending.end(), [](const PendingHit& p) { return !p.decision; });
          const auto d = static_cast<HumanDecision>(rng.uniform_below(3));
          engine.submit(it->hit.hit_id, d);
        }
        trace = engine.trace();
      } else {
        trace = run_protocol(id, img, *index, glyph_ocr()).trace;
      }
      const auto problems = validate_trace(trace);
      for (const auto& rec : trace.steps)
        if (rec.decision.kind == Decision::Kind::Advance && !legal_advance(rec.step, rec.decision.next_step)) ++invalid;
      if (!problems.empty()) {
        ++invalid;
        if (first_problem.empty()) first_problem = id + ": " + problems.front();
      }
      if (!trace.steps.empty()) ++terminal_steps[trace.steps.back().step];
    } catch (const std::exception& e) {
      ++errors;
      if (first_problem.empty()) first_problem = id + ": " + e.what();
    }
  }
  std::string ends;
  for (const auto& [step, n] : terminal_steps) ends += fmt::format(" {}:{}", step, n);
  std::string detail = fmt::format("1000 fixtures ({} interactive), {} invalid, {} errors; terminal steps{}; {:.0f}s",
                                   interactive, invalid, errors, ends, seconds_since(t0));
  if (!first_problem.empty()) detail += "; first: " + first_problem;
  return {invalid == 0 && errors == 0, detail};
}

// A non-meme candidate plus the relative that should turn it into `expected`.
struct MonotoneCase {
  std::string id;
  RasterImage candidate;
  RasterImage relative;
  Outcome expected;
};

MonotoneCase monotone_case(int i) {
  const std::uint64_t base = 0xA11CE000ULL + static_cast<std::uint64_t>(i) * 7919;
  const std::string id = fmt::format("mono-{:02d}", i);
  switch (i % 4) {
    case 0: {  // caption over a photo; relative recaptions the same photo
      auto photo = synth::photo(base);
      auto c = photo, r = photo;
      synth::caption_top(c, synth::words(base + 1, 3));
      synth::caption_top(r, synth::words(base + 2, 3));
      return {id, c, r, Outcome::CharacterMacro};
    }
    case 1: {  // photo plus whitespace caption
      auto photo = synth::photo(base, synth::kSize, 192);
      return {id, synth::with_whitespace(photo, synth::words(base + 1, 2)),
              synth::with_whitespace(photo, synth::words(base + 2, 2)), Outcome::MemeticImage};
    }
    case 2: {  // two captioned panels
      auto top = synth::photo(base, synth::kSize, 124), bottom = synth::photo(base + 9, synth::kSize, 124);
      auto c1 = top, c2 = bottom, r1 = top, r2 = bottom;
      synth::caption_top(c1, synth::words(base + 1, 2));
      synth::caption_top(c2, synth::words(base + 2, 2));
      synth::caption_top(r1, synth::words(base + 3, 2));
      synth::caption_top(r2, synth::words(base + 4, 2));
      return {id, synth::stack({c1, c2}), synth::stack({r1, r2}), Outcome::FormatMacro};
    }
    default: {  // pasted element over unrelated photos
      const auto element = synth::sticker(base);
      auto c = synth::photo(base + 1), r = synth::photo(base + 2);
      c.blit(element, 30 + i % 90, 60);
      r.blit(element, 120 - i % 90, 140);
      synth::caption_top(c, synth::words(base + 3, 3));
      synth::caption_top(r, synth::words(base + 4, 3));
      return {id, c, r, Outcome::TransferredSymbols};
    }
  }
}

Outcome_ monotone() {
  const auto t0 = Clock::now();
  const auto& items = corpus();
  std::vector<const RasterImage*> base_images;
  for (const auto& it : items) base_images.push_back(&it.image);
  const auto base = testing::corpus_index();

  int flipped = 0, precondition = 0;
  std::vector<LocalIndexEntry> all_relatives;
  std::vector<RasterImage> relative_images;
  std::string misses;
  for (int i = 0; i < 50; ++i) {
    const auto c = monotone_case(i);
    const auto before = run_protocol(c.id, c.candidate, *base, glyph_ocr());
    if (!before.verdict || before.verdict->outcome != Outcome::NonMemeticImageText) {
      misses += fmt::format(" {}:pre={}", c.id, before.verdict ? code(before.verdict->outcome) : "aborted");
      continue;
    }
    ++precondition;
    auto entries = corpus_entries();
    auto images = base_images;
    entries.push_back(make_entry(c.id + "-rel", c.relative, glyph_ocr()));
    images.push_back(&c.relative);
    all_relatives.push_back(entries.back());
    relative_images.push_back(c.relative);
    const auto grown = testing::index_of(std::move(entries), images);
    const auto after = run_protocol(c.id, c.candidate, grown, glyph_ocr());
    if (after.verdict && after.verdict->outcome == c.expected) {
      ++flipped;
    } else {
      misses += fmt::format(" {}:{}->{}", c.id, code(c.expected), after.verdict ? code(after.verdict->outcome) : "aborted");
    }
  }

  // Every meme verdict under the corpus index must survive the superset that
  // also holds all constructed relatives.
  auto entries = corpus_entries();
  auto images = base_images;
  entries.insert(entries.end(), all_relatives.begin(), all_relatives.end());
  for (const auto& r : relative_images) images.push_back(&r);
  const auto superset = testing::index_of(std::move(entries), images);
  int memes = 0, lost = 0;
  for (const auto& it : items) {
    const auto v = run_protocol(it.id, it.image, *base, glyph_ocr()).verdict;
    if (!v || !is_meme(v->outcome)) continue;
    ++memes;
    const auto w = run_protocol(it.id, it.image, superset, glyph_ocr()).verdict;
    if (!w || !is_meme(w->outcome)) {
      ++lost;
      misses += " lost:" + it.id;
    }
  }
  std::string detail = fmt::format("{}/50 fixtures nMIT under I, {}/50 flipped to the constructed type; {}/{} memes kept "
                                   "under the superset; {:.0f}s",
                                   precondition, flipped, memes - lost, memes, seconds_since(t0));
  if (!misses.empty()) detail += ";" + misses;
  return {precondition == 50 && flipped == 50 && lost == 0 && memes > 0, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome_()> run;
  };
  const std::vector<Criterion> criteria = {
      {"synthetic-corpus", synthetic_corpus}, {"results-table-arithmetic", table_arithmetic},
      {"sampler-determinism", sampler},       {"search-oracle-equivalence", hash_stage},
      {"trace-validity-fuzz", trace_fuzz},    {"monotone-memeticity", monotone},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome_ r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", c.name, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
