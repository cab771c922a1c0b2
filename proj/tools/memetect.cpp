#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "memetect/audit.hpp"
#include "memetect/config.hpp"
#include "memetect/errors.hpp"
#include "memetect/external.hpp"
#include "memetect/files.hpp"
#include "memetect/local_index.hpp"
#include "memetect/manifest.hpp"
#include "memetect/protocol.hpp"
#include "memetect/service.hpp"
#include "memetect/synth.hpp"

namespace fs = std::filesystem;
using namespace memetect;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kInput = 1, kProvider = 2, kInternal = 3 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ProviderUnavailable: return kProvider;
    case ErrorCode::Internal:
    case ErrorCode::ContractViolation: return kInternal;
    default: return kInput;
  }
}

struct Common {
  std::optional<fs::path> config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::string provider;
  std::string index;
  bool quiet = false;
};

Config effective_config(const Common& c) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidInput, "--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) overrides.emplace_back("audit.seed", std::to_string(*c.seed));
  if (c.n) overrides.emplace_back("search.n", std::to_string(*c.n));
  if (!c.provider.empty()) overrides.emplace_back("search.provider", c.provider);
  if (!c.index.empty()) overrides.emplace_back("search.index", c.index);
  Config cfg = load_config(c.config_file, overrides);
  spdlog::info("config {}", config_to_json(cfg));
  return cfg;
}

std::shared_ptr<const SearchProvider> make_provider(const Config& cfg, std::shared_ptr<const LocalIndex> fallback = {}) {
  if (cfg.search_provider == "external") {
    if (cfg.search_endpoint.empty()) throw Error(ErrorCode::InvalidInput, "search.endpoint is required for the external provider");
    ExternalOptions o;
    o.endpoint = cfg.search_endpoint;
    o.api_key = cfg.search_api_key;
    o.cache_dir = cfg.search_cache_dir.empty() ? fs::path(".memetect-cache") : cfg.search_cache_dir;
    o.rate_limit = cfg.search_rate_limit;
    o.timeout = std::chrono::seconds(cfg.search_timeout_seconds);
    o.adapter = make_search_adapter(cfg.search_adapter);
    return std::make_shared<ExternalSearchClient>(std::move(o));
  }
  if (!cfg.index_path.empty()) return std::make_shared<LocalIndex>(LocalIndex::load(cfg.index_path));
  if (fallback) return fallback;
  spdlog::warn("no index configured; searching an empty local index");
  return std::make_shared<LocalIndex>();
}

int cmd_index(const Common& common, const fs::path& manifest, const fs::path& out) {
  const Config cfg = effective_config(common);
  const auto ocr = make_text_extractor(cfg.ocr_backend);
  const auto records = read_manifest(manifest);
  BuildReport report;
  const LocalIndex index = LocalIndex::build(records, *ocr, &report);
  index.save(out);
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  std::cout << fmt::format("indexed {} of {} entries, {} warnings -> {}\n", report.indexed, records.size(),
                           report.warnings.size(), out.string());
  return kOk;
}

int cmd_identify(const Common& common, const fs::path& image_path, bool as_json, std::optional<fs::path> trace_out) {
  const Config cfg = effective_config(common);
  const auto ocr = make_text_extractor(cfg.ocr_backend);
  const RasterImage image = load_image(image_path);
  const auto provider = make_provider(cfg);
  const std::string id = image_path.stem().string();
  const RunResult run = run_protocol(id, image, *provider, *ocr, cfg.engine);

  const fs::path tpath = trace_out ? *trace_out : fs::path(id + ".trace.json");
  write_file_atomic(tpath, trace_to_json(run.trace, 2));
  if (!run.verdict) {
    const auto& last = run.trace.steps.back();
    std::cerr << "aborted at step " << last.step << ": " << last.decision.reason << "\n";
    std::cout << "ABORTED\ntrace: " << tpath.string() << "\n";
    return kProvider;
  }
  if (as_json) {
    json j = json::parse(verdict_to_json(*run.verdict));
    j["schema_version"] = 1;
    j["trace_path"] = tpath.string();
    std::cout << j.dump() << "\n";
  } else {
    std::cout << code(run.verdict->outcome) << (run.verdict->viral_flag ? " viral" : "") << "\n"
              << "trace: " << tpath.string() << "\n";
  }
  return kOk;
}

std::string dataset_name(const std::string& given, const fs::path& manifest) {
  return given.empty() ? manifest.stem().string() : given;
}

void write_report(const audit::AuditReport& report, const std::optional<fs::path>& csv, const std::optional<fs::path>& js) {
  if (csv) write_file_atomic(*csv, audit::report_to_csv(report));
  if (js) write_file_atomic(*js, audit::report_to_json(report, 2));
  if (!csv && !js) std::cout << audit::report_to_csv(report);
  for (const auto& d : report.discrepancies) {
    spdlog::warn("{}: printed {} = {} but counts give {}", d.dataset, d.field, d.printed, d.recomputed);
  }
  std::cout << fmt::format("average meme {}%, nonmeme {}%\n", audit::format_percent(report.average_meme_percent()),
                           audit::format_percent(report.average_nonmeme_percent()));
}

// {"dataset", "outcome", "count"?} per line.
audit::AuditReport report_from_verdicts(const fs::path& path) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::optional<Outcome>>> by_dataset;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto ds = j.at("dataset").get<std::string>();
      std::optional<Outcome> o;
      if (j.contains("outcome") && !j["outcome"].is_null()) o = outcome_from_string(j["outcome"].get<std::string>());
      const auto count = j.value("count", std::size_t{1});
      if (!by_dataset.count(ds)) order.push_back(ds);
      auto& v = by_dataset[ds];
      v.insert(v.end(), count, o);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  audit::AuditReport report;
  for (const auto& ds : order) {
    const auto& v = by_dataset[ds];
    report.rows.push_back(audit::aggregate(ds, std::span<const std::optional<Outcome>>(v), v.size()));
  }
  return report;
}

audit::AuditReport report_from_published(const fs::path& path) {
  std::vector<audit::PublishedRow> rows;
  try {
    for (const auto& r : json::parse(read_text_file(path))) {
      audit::PublishedRow p;
      p.dataset = r.at("dataset").get<std::string>();
      for (auto o : kAllOutcomes) p.counts[static_cast<std::size_t>(o)] = r.at("counts").at(std::string(code(o))).get<std::size_t>();
      p.meme_total = r.at("meme_total").get<double>();
      p.nonmeme_total = r.at("nonmeme_total").get<double>();
      rows.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
  }
  return audit::ingest_published(rows);
}

int cmd_audit(const Common& common, const std::optional<fs::path>& manifest, const std::string& dataset,
              std::optional<std::size_t> k, const std::optional<fs::path>& from_verdicts,
              const std::optional<fs::path>& published, const std::optional<fs::path>& out,
              const std::optional<fs::path>& json_out, std::optional<unsigned> jobs) {
  if (from_verdicts) {
    write_report(report_from_verdicts(*from_verdicts), out, json_out);
    return kOk;
  }
  if (published) {
    write_report(report_from_published(*published), out, json_out);
    return kOk;
  }
  if (!manifest) throw Error(ErrorCode::InvalidInput, "audit needs --manifest, --from-verdicts or --published");
  Config cfg = effective_config(common);
  if (k) cfg.k = *k;
  if (jobs) cfg.jobs = std::max(1u, *jobs);
  const auto ocr = make_text_extractor(cfg.ocr_backend);
  const auto records = read_manifest(*manifest);
  const std::string name = dataset_name(dataset, *manifest);
  const auto set = audit::sample(audit::dataset_from_records(name, records), cfg.k, cfg.seed);
  if (set.short_sample) spdlog::warn("{}", set.warning);

  // Without a configured index the manifest itself is the search corpus.
  std::shared_ptr<const LocalIndex> own;
  if (cfg.search_provider == "local" && cfg.index_path.empty()) {
    BuildReport br;
    own = std::make_shared<LocalIndex>(LocalIndex::build(records, *ocr, &br));
    for (const auto& w : br.warnings) spdlog::warn("{}", w);
  }
  const auto provider = make_provider(cfg, own);

  std::map<std::string, const ManifestRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<std::optional<Outcome>> outcomes(set.items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> provider_down{false};
  std::mutex err_mu;
  std::optional<Error> first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < set.items.size(); i = next++) {
      const auto& rec = *by_id.at(set.items[i].file);
      try {
        const auto run = run_protocol(rec.id, load_image(rec.path), *provider, *ocr, cfg.engine);
        if (run.verdict) {
          outcomes[i] = run.verdict->outcome;
        } else {
          provider_down = true;
        }
      } catch (const Error& e) {
        std::lock_guard lock(err_mu);
        spdlog::error("{}: {}", rec.id, e.what());
        if (!first_error) first_error = e;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (provider_down) throw Error(ErrorCode::ProviderUnavailable, "search provider failed during the audit");
  if (first_error) throw *first_error;

  audit::AuditReport report;
  report.rows.push_back(audit::aggregate(name, std::span<const std::optional<Outcome>>(outcomes), set.items.size()));
  write_report(report, out, json_out);
  return kOk;
}

int cmd_sample(const Common& common, const fs::path& manifest, const std::string& dataset, std::optional<std::size_t> k,
               const std::optional<fs::path>& out) {
  Config cfg = effective_config(common);
  if (k) cfg.k = *k;
  const auto set = audit::sample(audit::dataset_from_records(dataset_name(dataset, manifest), read_manifest(manifest)),
                                 cfg.k, cfg.seed);
  if (set.short_sample) spdlog::warn("{}", set.warning);
  const auto text = audit::sample_to_json(set, 2) + "\n";
  if (out) {
    write_file_atomic(*out, text);
  } else {
    std::cout << text;
  }
  return kOk;
}

std::atomic<Service*> g_service{nullptr};

int cmd_serve(const Common& common, const std::string& addr, const std::string& store) {
  Config cfg = effective_config(common);
  if (!addr.empty()) cfg.service_addr = addr;
  if (!store.empty()) cfg.service_store = store;
  if (cfg.service_store.empty()) cfg.service_store = "memetect-store";
  ServiceOptions o;
  o.store_dir = cfg.service_store;
  o.providers["local"] = cfg.search_provider == "local" ? make_provider(cfg) : std::make_shared<LocalIndex>();
  if (!cfg.search_endpoint.empty()) {
    Config ext = cfg;
    ext.search_provider = "external";
    o.providers["external"] = make_provider(ext);
  }
  o.default_provider = cfg.search_provider;
  o.ocr = make_text_extractor(cfg.ocr_backend);
  o.engine = cfg.engine;
  o.api_token = cfg.service_api_token;
  o.max_upload = cfg.service_max_upload;
  Service service(std::move(o));
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_service.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_service.load()) s->stop();
  });
  service.listen(cfg.service_addr);
  g_service = nullptr;
  return kOk;
}

int cmd_synth(std::uint64_t seed, const fs::path& out) {
  const auto items = synth::corpus(seed);
  const auto manifest = synth::write_corpus(items, out);
  std::cout << fmt::format("wrote {} items -> {}\n", items.size(), manifest.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("memetect");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::info);

  CLI::App app{"memetect: identify memes by their memetic relatives"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  std::string config_file;
  app.add_option("--config", config_file, "JSON config file (default: $MEMETECT_CONFIG)");
  app.add_option("--set", common.sets, "Override a config key, key=value (repeatable)");
  app.add_option("--seed", common.seed, "Sampling seed");
  app.add_option("-n,--results", common.n, "Hits reviewed per search");
  app.add_option("--provider", common.provider, "Search provider: local or external");
  app.add_option("--index", common.index, "Local index file");
  app.add_flag("-q,--quiet", common.quiet, "Only log warnings and errors");

  fs::path manifest_path, out_path, image_path;
  auto* index = app.add_subcommand("index", "Build a local search index from a manifest");
  index->add_option("--manifest", manifest_path, "JSON Lines manifest")->required();
  index->add_option("--out", out_path, "Index file to write")->required();

  bool as_json = false;
  std::optional<fs::path> trace_out;
  auto* identify = app.add_subcommand("identify", "Run the protocol on one image");
  identify->add_option("image", image_path, "PNG or JPEG")->required();
  identify->add_flag("--json", as_json, "Print the verdict as JSON");
  identify->add_option("--trace-out", trace_out, "Where to write the trace (default: <image stem>.trace.json)");

  std::optional<fs::path> audit_manifest, from_verdicts, published, report_out, json_out;
  std::string dataset;
  std::optional<std::size_t> k;
  std::optional<unsigned> jobs;
  auto* audit_cmd = app.add_subcommand("audit", "Sample a dataset, identify every sample, aggregate");
  audit_cmd->add_option("--manifest", audit_manifest, "JSON Lines manifest");
  audit_cmd->add_option("--dataset", dataset, "Dataset name (default: manifest stem)");
  audit_cmd->add_option("--k", k, "Sample size (default 200)");
  audit_cmd->add_option("--jobs", jobs, "Parallel protocol runs");
  audit_cmd->add_option("--from-verdicts", from_verdicts, "Aggregate a JSON Lines verdict list instead");
  audit_cmd->add_option("--published", published, "Recompute published rows and flag discrepancies");
  audit_cmd->add_option("--out", report_out, "CSV report");
  audit_cmd->add_option("--json-out", json_out, "JSON report");

  std::optional<fs::path> sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a reproducible sample from a manifest");
  sample_cmd->add_option("--manifest", manifest_path, "JSON Lines manifest")->required();
  sample_cmd->add_option("--dataset", dataset, "Dataset name (default: manifest stem)");
  sample_cmd->add_option("--k", k, "Sample size (default 200)");
  sample_cmd->add_option("--out", sample_out, "Write the sample set here instead of stdout");

  std::string addr, store;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", addr, "host:port (default 127.0.0.1:8080)");
  serve->add_option("--store", store, "Store directory");

  std::uint64_t synth_seed = 7;
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic labeled corpus");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--corpus-seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }
  if (common.quiet) spdlog::set_level(spdlog::level::warn);
  if (!config_file.empty()) common.config_file = config_file;

  try {
    if (index->parsed()) return cmd_index(common, manifest_path, out_path);
    if (identify->parsed()) return cmd_identify(common, image_path, as_json, trace_out);
    if (audit_cmd->parsed()) {
      return cmd_audit(common, audit_manifest, dataset, k, from_verdicts, published, report_out, json_out, jobs);
    }
    if (sample_cmd->parsed()) return cmd_sample(common, manifest_path, dataset, k, sample_out);
    if (serve->parsed()) return cmd_serve(common, addr, store);
    if (synth_cmd->parsed()) return cmd_synth(synth_seed, synth_out);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInternal;
  }
  return kInternal;
}
