#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace memetect {

/// One JSON Lines record: {"id", "path", "subset"?, "label"?}.
struct ManifestRecord {
  std::string id;
  std::filesystem::path path;  // absolute after reading
  std::string subset;
  std::string label;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Relative paths resolve against the manifest's directory. Blank lines are
/// skipped. Malformed lines and duplicate ids raise ErrorCode::InvalidInput.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(const std::string& jsonl, const std::filesystem::path& base_dir);

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);

}  // namespace memetect
