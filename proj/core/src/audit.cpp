#include "memetect/audit.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "memetect/errors.hpp"
#include "memetect/random.hpp"

namespace memetect::audit {

using nlohmann::json;

DatasetManifest dataset_from_records(std::string name, const std::vector<ManifestRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::InvalidInput, "manifest is empty");
  DatasetManifest m;
  m.name = std::move(name);
  std::unordered_map<std::string, std::size_t> subset_at;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw Error(ErrorCode::InvalidInput, "duplicate file in dataset: " + r.id);
    const std::string subset = r.subset.empty() ? "default" : r.subset;
    auto [it, fresh] = subset_at.emplace(subset, m.subsets.size());
    if (fresh) m.subsets.push_back({subset, {}});
    m.subsets[it->second].files.push_back(r.id);
  }
  return m;
}

SampleSet sample(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  std::size_t total = 0;
  for (const auto& s : manifest.subsets) total += s.files.size();
  if (total == 0) throw Error(ErrorCode::InvalidInput, "manifest is empty");

  SampleSet out;
  out.dataset = manifest.name;
  out.seed = seed;
  out.k = k;
  if (k >= total) {
    for (const auto& s : manifest.subsets)
      for (const auto& f : s.files) out.items.push_back({f, s.name});
    if (k > total) {
      out.short_sample = true;
      out.warning = fmt::format("k={} exceeds the {} files in {}; returning all files", k, total, manifest.name);
    }
    return out;
  }

  std::vector<std::vector<std::size_t>> pools;
  for (const auto& s : manifest.subsets) {
    std::vector<std::size_t> p(s.files.size());
    std::iota(p.begin(), p.end(), 0);
    pools.push_back(std::move(p));
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> open;
  out.items.reserve(k);
  while (out.items.size() < k) {
    open.clear();
    for (std::size_t i = 0; i < pools.size(); ++i)
      if (!pools[i].empty()) open.push_back(i);
    const std::size_t si = open[rng.uniform_below(open.size())];
    auto& pool = pools[si];
    const std::size_t pick = rng.uniform_below(pool.size());
    out.items.push_back({manifest.subsets[si].files[pool[pick]], manifest.subsets[si].name});
    pool[pick] = pool.back();
    pool.pop_back();
  }
  return out;
}

std::string sample_to_json(const SampleSet& s, int indent) {
  json items = json::array();
  for (const auto& e : s.items) items.push_back({{"file", e.file}, {"subset", e.subset}});
  json j = {{"schema_version", 1}, {"dataset", s.dataset}, {"seed", s.seed}, {"k", s.k}, {"items", std::move(items)}};
  if (s.short_sample) j["warning"] = s.warning;
  return j.dump(indent);
}

namespace {

std::size_t idx(Outcome o) { return static_cast<std::size_t>(o); }

double round1(double p) { return std::round(p * 10.0) / 10.0; }

}  // namespace

double ReportRow::percent(Outcome o) const {
  return percent_base > 0 ? 100.0 * static_cast<double>(counts[idx(o)]) / percent_base : 0.0;
}
double ReportRow::meme_percent() const {
  return percent_base > 0 ? 100.0 * static_cast<double>(meme_total) / percent_base : 0.0;
}
double ReportRow::nonmeme_percent() const {
  return percent_base > 0 ? 100.0 * static_cast<double>(nonmeme_total) / percent_base : 0.0;
}

namespace {

template <class F>
double mean_over(const std::vector<ReportRow>& rows, F f) {
  if (rows.empty()) return 0.0;
  double sum = 0;
  for (const auto& r : rows) sum += f(r);
  return sum / static_cast<double>(rows.size());
}

}  // namespace

double AuditReport::average_percent(Outcome o) const {
  return mean_over(rows, [o](const ReportRow& r) { return r.percent(o); });
}
double AuditReport::average_meme_percent() const {
  return mean_over(rows, [](const ReportRow& r) { return r.meme_percent(); });
}
double AuditReport::average_nonmeme_percent() const {
  return mean_over(rows, [](const ReportRow& r) { return r.nonmeme_percent(); });
}

ReportRow row_from_counts(std::string dataset, const Counts& counts, std::optional<double> percent_base) {
  ReportRow r;
  r.dataset = std::move(dataset);
  r.counts = counts;
  for (auto o : kAllOutcomes) (is_meme(o) ? r.meme_total : r.nonmeme_total) += counts[idx(o)];
  r.sample_size = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  r.percent_base = percent_base.value_or(static_cast<double>(r.sample_size));

  const auto& c = r.counts;
  const std::size_t memes = c[idx(Outcome::CharacterMacro)] + c[idx(Outcome::FormatMacro)] +
                            c[idx(Outcome::MemeticImage)] + c[idx(Outcome::TransferredSymbols)] +
                            c[idx(Outcome::MemeticTrend)];
  const std::size_t nonmemes = c[idx(Outcome::NonMemeticImageText)] + c[idx(Outcome::NonMultimodal)];
  if (memes != r.meme_total || nonmemes != r.nonmeme_total || r.meme_total + r.nonmeme_total != r.sample_size) {
    throw Error(ErrorCode::ContractViolation, "report row does not conserve counts: " + r.dataset);
  }
  return r;
}

ReportRow aggregate(std::string dataset, std::span<const std::optional<Outcome>> verdicts, std::size_t sample_size) {
  if (verdicts.size() != sample_size) {
    throw Error(ErrorCode::ContractViolation,
                fmt::format("{} verdicts for a sample of {} in {}", verdicts.size(), sample_size, dataset));
  }
  Counts counts{};
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i]) throw Error(ErrorCode::ContractViolation, fmt::format("verdict {} in {} has no outcome", i, dataset));
    ++counts[idx(*verdicts[i])];
  }
  return row_from_counts(std::move(dataset), counts);
}

ReportRow aggregate(std::string dataset, std::span<const Verdict> verdicts, std::size_t sample_size) {
  std::vector<std::optional<Outcome>> outcomes;
  outcomes.reserve(verdicts.size());
  for (const auto& v : verdicts) outcomes.emplace_back(v.outcome);
  return aggregate(std::move(dataset), std::span<const std::optional<Outcome>>(outcomes), sample_size);
}

AuditReport ingest_published(const std::vector<PublishedRow>& rows, double percent_base) {
  AuditReport report;
  for (const auto& p : rows) {
    ReportRow r = row_from_counts(p.dataset, p.counts, percent_base);
    auto flag = [&](const char* field, double printed, double recomputed) {
      if (std::abs(printed - recomputed) > 1e-9) report.discrepancies.push_back({p.dataset, field, printed, recomputed});
    };
    flag("meme_total", p.meme_total, static_cast<double>(r.meme_total));
    flag("nonmeme_total", p.nonmeme_total, static_cast<double>(r.nonmeme_total));
    flag("sample_size", percent_base, static_cast<double>(r.sample_size));
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::string format_percent(double p) { return fmt::format("{:.1f}", round1(p)); }

std::string report_to_csv(const AuditReport& report) {
  std::string out = "dataset,CM,FM,MI,TS,MT,meme_total,nMIT,nMM,nonmeme_total,sample_size\n";
  for (const auto& r : report.rows) {
    std::string name = r.dataset;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : name) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      name = quoted + "\"";
    }
    const auto& c = r.counts;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", name, c[idx(Outcome::CharacterMacro)],
                       c[idx(Outcome::FormatMacro)], c[idx(Outcome::MemeticImage)],
                       c[idx(Outcome::TransferredSymbols)], c[idx(Outcome::MemeticTrend)], r.meme_total,
                       c[idx(Outcome::NonMemeticImageText)], c[idx(Outcome::NonMultimodal)], r.nonmeme_total,
                       r.sample_size);
  }
  return out;
}

std::string report_to_json(const AuditReport& report, int indent) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json counts = json::object();
    json pct = json::object();
    for (auto o : kAllOutcomes) {
      counts[std::string(code(o))] = r.counts[idx(o)];
      pct[std::string(code(o))] = round1(r.percent(o));
    }
    pct["meme_total"] = round1(r.meme_percent());
    pct["nonmeme_total"] = round1(r.nonmeme_percent());
    rows.push_back({{"dataset", r.dataset},
                    {"counts", std::move(counts)},
                    {"meme_total", r.meme_total},
                    {"nonmeme_total", r.nonmeme_total},
                    {"sample_size", r.sample_size},
                    {"percentages", std::move(pct)}});
  }
  json avg = json::object();
  for (auto o : kAllOutcomes) avg[std::string(code(o))] = round1(report.average_percent(o));
  avg["meme_total"] = round1(report.average_meme_percent());
  avg["nonmeme_total"] = round1(report.average_nonmeme_percent());
  json disc = json::array();
  for (const auto& d : report.discrepancies) {
    disc.push_back({{"dataset", d.dataset}, {"field", d.field}, {"printed", d.printed}, {"recomputed", d.recomputed}});
  }
  json j = {{"schema_version", 1}, {"rows", std::move(rows)}, {"averages", std::move(avg)}, {"discrepancies", std::move(disc)}};
  return j.dump(indent);
}

}  // namespace memetect::audit
