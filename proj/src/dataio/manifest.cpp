#include "vafusion/dataio/manifest.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "vafusion/errors.hpp"

namespace vaf {

namespace fs = std::filesystem;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::devel: return "devel";
    case Split::test: return "test";
  }
  return "unknown";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "devel") return Split::devel;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split: " + std::string(s));
}

std::vector<const ManifestEntry*> Manifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

bool Manifest::has_split(Split s) const {
  for (const auto& e : entries)
    if (e.split == s) return true;
  return false;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_file(const fs::path& p, const std::string& video_id) {
  if (!fs::exists(p)) throw DataError("manifest: " + video_id + " references missing file " + p.string());
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  const fs::path rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: " + path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  Manifest m;
  std::set<std::string> ids;
  try {
    for (const auto& v : doc.at("videos")) {
      ManifestEntry e;
      e.video_id = v.at("video_id").get<std::string>();
      if (!ids.insert(e.video_id).second) throw DataError("manifest: duplicate video_id " + e.video_id);
      e.split = split_from_string(v.at("split").get<std::string>());
      e.fps = v.at("fps").get<double>();
      if (!(e.fps > 0.0)) throw DataError("manifest: " + e.video_id + " has non-positive fps");
      e.annotations = resolve(base, v.at("annotations").get<std::string>());
      require_file(e.annotations, e.video_id);
      if (v.contains("streams")) {
        for (const auto& [key, val] : v.at("streams").items()) {
          const fs::path p = resolve(base, val.get<std::string>());
          require_file(p, e.video_id);
          e.streams.emplace(modality_from_string(key), p);
        }
      }
      e.audio_rate = v.value("audio_rate", e.fps);
      if (v.contains("mouth") && !v.at("mouth").is_null()) {
        e.mouth = resolve(base, v.at("mouth").get<std::string>());
        require_file(*e.mouth, e.video_id);
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: " + path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = fs::absolute(path).parent_path();
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json v;
    v["video_id"] = e.video_id;
    v["split"] = std::string(to_string(e.split));
    v["fps"] = e.fps;
    v["annotations"] = relative_to(fs::absolute(e.annotations), base);
    nlohmann::json streams = nlohmann::json::object();
    for (const auto& [mod, p] : e.streams) streams[std::string(to_string(mod))] = relative_to(fs::absolute(p), base);
    v["streams"] = streams;
    v["audio_rate"] = e.audio_rate;
    if (e.mouth) v["mouth"] = relative_to(fs::absolute(*e.mouth), base);
    videos.push_back(std::move(v));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("manifest: cannot write " + path.string());
  out << nlohmann::json{{"videos", videos}}.dump(2) << '\n';
}

}  // namespace vaf
