#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memetect/manifest.hpp"
#include "memetect/protocol.hpp"

namespace memetect::audit {

struct Subset {
  std::string name;
  std::vector<std::string> files;  // manifest ids
};

struct DatasetManifest {
  std::string name;
  std::vector<Subset> subsets;
  std::string license;
};

/// Groups records by subset in order of first appearance; records without a
/// subset go to "default". Empty manifests and repeated ids are rejected.
DatasetManifest dataset_from_records(std::string name, const std::vector<ManifestRecord>& records);

struct SampleEntry {
  std::string file;
  std::string subset;
  friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

struct SampleSet {
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::vector<SampleEntry> items;  // selection order
  bool short_sample = false;       // k exceeded the manifest
  std::string warning;
};

/// Draws min(k, total) files. Each draw picks a subset uniformly among the
/// subsets that still have unselected files (uniform_below over their count,
/// in manifest order), then a file uniformly among that subset's remaining
/// files; the chosen file is swap-removed from the subset's pool. One
/// SplitMix64 seeded with `seed` supplies both draws. When k >= total the
/// whole manifest is returned in manifest order.
SampleSet sample(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed);

std::string sample_to_json(const SampleSet& s, int indent = -1);

inline constexpr std::size_t kOutcomeCount = kAllOutcomes.size();
using Counts = std::array<std::size_t, kOutcomeCount>;  // indexed by Outcome

struct ReportRow {
  std::string dataset;
  Counts counts{};
  std::size_t meme_total = 0;
  std::size_t nonmeme_total = 0;
  std::size_t sample_size = 0;
  double percent_base = 0;  // denominator for percentages; sample_size unless stated

  double percent(Outcome o) const;
  double meme_percent() const;
  double nonmeme_percent() const;
};

/// Where a published row disagrees with its own counts.
struct Discrepancy {
  std::string dataset;
  std::string field;  // "meme_total", "nonmeme_total" or "sample_size"
  double printed = 0;
  double recomputed = 0;
};

struct AuditReport {
  std::vector<ReportRow> rows;
  std::vector<Discrepancy> discrepancies;

  /// Unweighted means over rows of the per-row percentages.
  double average_percent(Outcome o) const;
  double average_meme_percent() const;
  double average_nonmeme_percent() const;
};

/// Builds a row from counts; totals are always recomputed. Throws
/// ContractViolation when the conservation identities fail.
ReportRow row_from_counts(std::string dataset, const Counts& counts, std::optional<double> percent_base = {});

/// One verdict per sampled file. A missing outcome (e.g. an aborted run) or a
/// list whose size differs from sample_size is a ContractViolation.
ReportRow aggregate(std::string dataset, std::span<const std::optional<Outcome>> verdicts, std::size_t sample_size);
ReportRow aggregate(std::string dataset, std::span<const Verdict> verdicts, std::size_t sample_size);

/// A row as printed in a results table: per-type figures plus the printed
/// totals, all in percent of the sample.
struct PublishedRow {
  std::string dataset;
  Counts counts{};
  double meme_total = 0;
  double nonmeme_total = 0;
};

/// Recomputes every published row over `percent_base` and flags each printed
/// total that disagrees with the recomputation.
AuditReport ingest_published(const std::vector<PublishedRow>& rows, double percent_base = 100.0);

/// Percentages to one decimal.
std::string format_percent(double p);

/// Columns: dataset, CM, FM, MI, TS, MT, meme_total, nMIT, nMM, nonmeme_total, sample_size.
std::string report_to_csv(const AuditReport& report);
std::string report_to_json(const AuditReport& report, int indent = -1);

}  // namespace memetect::audit
