#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vafusion/dataio/streams.hpp"

namespace vaf {

enum class Split { train, devel, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

/// One video of a corpus. Paths are absolute once loaded.
///
/// `streams` maps a modality to its file: face and audio are feature CSVs,
/// behavior_* are segment CSVs. `audio_rate` is the audio feature rate in Hz.
struct ManifestEntry {
  std::string video_id;
  Split split = Split::train;
  double fps = 25.0;
  std::filesystem::path annotations;
  std::map<Modality, std::filesystem::path> streams;
  double audio_rate = 0.0;
  std::optional<std::filesystem::path> mouth;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(Split s) const;
  bool has_split(Split s) const;
};

/// JSON document {"videos": [{video_id, split, fps, annotations, streams{...}, audio_rate, mouth}]}.
/// Relative paths resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest's directory when they lie beneath it.
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace vaf
