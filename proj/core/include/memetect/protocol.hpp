#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memetect/decompose.hpp"
#include "memetect/ocr.hpp"
#include "memetect/relate.hpp"
#include "memetect/search.hpp"

namespace memetect {

enum class Outcome { CharacterMacro, FormatMacro, MemeticImage, TransferredSymbols, MemeticTrend, NonMemeticImageText, NonMultimodal };

/// Short codes as reported in result tables: CM FM MI TS MT nMIT nMM.
std::string_view code(Outcome o);
std::string_view long_name(Outcome o);
/// Accepts either the short code or the long name.
Outcome outcome_from_string(std::string_view s);
bool is_meme(Outcome o);
inline constexpr std::array<Outcome, 7> kAllOutcomes = {
    Outcome::CharacterMacro,      Outcome::FormatMacro,         Outcome::MemeticImage,  Outcome::TransferredSymbols,
    Outcome::MemeticTrend,        Outcome::NonMemeticImageText, Outcome::NonMultimodal};

enum class Mode { Automated, Interactive };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

enum class SessionStatus { Running, AwaitingJudgement, Completed, Aborted };
std::string_view to_string(SessionStatus s);
SessionStatus session_status_from_string(std::string_view s);

struct EngineConfig {
  Thresholds thresholds;
  std::size_t n = kDefaultResults;        // hits reviewed per query
  double modality_min_confidence = 0.5;   // Step 0
  double modality_max_coverage = 0.95;    // Step 0: text-only above this
  double trend_min_distance = 0.5;        // Step 7 mutual dissimilarity
  std::size_t trend_min_hits = 2;         // Step 7 "numerous"

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct Verdict {
  std::string candidate_id;
  Outcome outcome = Outcome::NonMemeticImageText;
  bool viral_flag = false;
  DecidedBy decided_by = DecidedBy::Automated;
  EngineConfig config;
};

/// One search issued inside a step.
struct QueryRecord {
  ViewKind view = ViewKind::FullImage;
  int view_index = 0;
  std::vector<Rect> source;
  std::string query;  // text query, or a description of the image query
  std::size_t hits_reviewed = 0;
  std::vector<RelatednessJudgement> judgements;
};

struct Decision {
  enum class Kind { Advance, Verdict, Abort };
  Kind kind = Kind::Advance;
  int next_step = 0;      // Advance
  Outcome outcome{};      // Verdict
  std::string reason;     // Abort
};

struct StepRecord {
  int step = 0;
  std::vector<QueryRecord> queries;
  std::vector<std::string> rules;  // conventions applied at this step
  std::string note;                // e.g. layout or coverage figures
  Decision decision;
  std::string started_at;
  std::string finished_at;
};

struct ProtocolTrace {
  static constexpr int kSchemaVersion = 1;
  int schema_version = kSchemaVersion;
  std::string candidate_id;
  std::string candidate_digest;
  std::string provider;
  std::string ocr_backend;
  Mode mode = Mode::Automated;
  EngineConfig config;
  SessionStatus status = SessionStatus::Running;
  std::vector<StepRecord> steps;
  std::optional<Verdict> verdict;
  std::string started_at;
  std::string finished_at;
};

/// Current UTC time, ISO 8601 with milliseconds.
std::string utc_now_iso();

std::string trace_to_json(const ProtocolTrace& trace, int indent = -1);
std::string verdict_to_json(const Verdict& v, int indent = -1);
ProtocolTrace trace_from_json(std::string_view json);

/// Legal edges of the step graph; verdict edges are checked per step
/// (Step 1 may only yield CM/FM/MI, Step 3 only CM, and so on).
bool legal_advance(int from, int to);
bool legal_verdict(int step, Outcome outcome);

/// Empty when the trace is a valid walk ending in its verdict (or abort).
std::vector<std::string> validate_trace(const ProtocolTrace& trace);

/// Step 7 rule: at least `min_hits` hits share the text (containment) and
/// lie at visual distance >= min_distance from the candidate and each other.
bool detect_memetic_trend(const Fingerprint& candidate, std::string_view c_text, const std::vector<SearchHit>& hits,
                          double containment = 0.8, double min_distance = 0.5, std::size_t min_hits = 2);

/// A hit awaiting a human decision in Interactive mode.
struct PendingHit {
  SearchHit hit;
  ViewKind view = ViewKind::FullImage;
  int view_index = 0;
  RelatednessJudgement suggestion;  // the automated judgement, for display
  std::optional<HumanDecision> decision;
};

/// Resumable executor for the identification protocol. Automated mode runs
/// straight through; Interactive mode stops at every step that issued a
/// search and waits for a human decision on each returned hit.
///
/// The provider and extractor must outlive the engine. Not thread-safe:
/// callers serialize access per engine.
class ProtocolEngine {
 public:
  ProtocolEngine(std::string candidate_id, RasterImage image, const SearchProvider& provider,
                 const TextExtractor& ocr, EngineConfig config = {}, Mode mode = Mode::Automated);
  ~ProtocolEngine();
  ProtocolEngine(ProtocolEngine&&) noexcept;
  ProtocolEngine& operator=(ProtocolEngine&&) noexcept;

  /// Continues an aborted trace from the step that failed.
  static ProtocolEngine resume(const ProtocolTrace& aborted, RasterImage image, const SearchProvider& provider,
                               const TextExtractor& ocr);

  /// Runs until Completed, Aborted, or AwaitingJudgement.
  SessionStatus advance();

  /// Records a human decision. Throws ErrorCode::InvalidState unless awaiting
  /// judgement, ErrorCode::Conflict for an unknown or already judged hit.
  SessionStatus submit(std::string_view hit_id, HumanDecision decision);

  SessionStatus status() const;
  int current_step() const;
  const std::vector<PendingHit>& pending() const;
  const ProtocolTrace& trace() const;
  const std::vector<TextRegion>& text_regions() const;
  std::optional<PanelLayout> layout() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RunResult {
  std::optional<Verdict> verdict;  // absent when the run aborted
  ProtocolTrace trace;
};

/// Automated run. Provider failure yields an Aborted trace and no verdict.
RunResult run_protocol(std::string candidate_id, const RasterImage& image, const SearchProvider& provider,
                       const TextExtractor& ocr, const EngineConfig& config = {});

/// Re-runs a stored trace's candidate under its recorded configuration.
RunResult replay(const ProtocolTrace& trace, const RasterImage& image, const SearchProvider& provider,
                 const TextExtractor& ocr);

}  // namespace memetect
