#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vafusion/dataio/csv_io.hpp"
#include "vafusion/dataio/manifest.hpp"
#include "vafusion/dataio/streams.hpp"

namespace vaf {

/// Everything loaded for one video.
struct VideoData {
  std::string id;
  Split split = Split::train;
  double fps = 25.0;
  AnnotationTrack annotations;
  std::optional<FeatureStream> face;
  std::optional<SegmentStream> behavior;
  std::optional<FeatureStream> audio;
  double audio_rate = 0.0;
  std::optional<MouthSeries> mouth;
  /// Replacement frame-level streams by modality name (e.g. frozen head outputs).
  std::map<std::string, FrameAlignedFeatures> aligned_override;

  std::size_t frames() const { return annotations.frames(); }
};

/// Feature width per modality name: "face", "behavior", "audio".
using InputDims = std::map<std::string, std::size_t>;

struct Dataset {
  std::vector<VideoData> videos;
  InputDims dims;

  std::vector<std::size_t> indices(Split s) const;
};

/// Loads every manifest entry. `behavior_modality` picks which behavior stream is read
/// when a video has both. Widths must agree across videos.
Dataset load_dataset(const Manifest& manifest, Modality behavior_modality, double sentinel = -5.0);

/// Frame-level view of one modality over the whole video ([frames x dim]):
/// face and audio through nearest-frame alignment, behavior through segment expansion.
/// A modality the video lacks comes back as zeros with nothing covered.
FrameAlignedFeatures aligned_stream(const VideoData& video, const std::string& modality, std::size_t dim);

}  // namespace vaf
