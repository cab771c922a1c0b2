#include "memetect/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "memetect/errors.hpp"

namespace memetect {

std::vector<ManifestRecord> parse_manifest(const std::string& jsonl, const std::filesystem::path& base_dir) {
  std::vector<ManifestRecord> out;
  std::set<std::string> seen;
  std::istringstream in(jsonl);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("path") || !j["id"].is_string() || !j["path"].is_string()) {
      throw Error(ErrorCode::InvalidInput, "manifest line " + std::to_string(lineno) + ": needs string id and path");
    }
    ManifestRecord r;
    r.id = j["id"].get<std::string>();
    std::filesystem::path p = j["path"].get<std::string>();
    r.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
    if (j.contains("subset") && j["subset"].is_string()) r.subset = j["subset"].get<std::string>();
    if (j.contains("label") && j["label"].is_string()) r.label = j["label"].get<std::string>();
    if (r.id.empty()) throw Error(ErrorCode::InvalidInput, "manifest line " + std::to_string(lineno) + ": empty id");
    if (!seen.insert(r.id).second) throw Error(ErrorCode::InvalidInput, "duplicate manifest id: " + r.id);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), std::filesystem::absolute(path).parent_path());
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write manifest " + path.string());
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.id}, {"path", r.path.generic_string()}};
    if (!r.subset.empty()) j["subset"] = r.subset;
    if (!r.label.empty()) j["label"] = r.label;
    out << j.dump() << '\n';
  }
}

}  // namespace memetect
