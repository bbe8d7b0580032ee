#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vafusion/dataio/streams.hpp"

namespace vaf {

/// Mouth-openness per video frame (1 = open).
struct MouthSeries {
  std::string video_id;
  double fps = 25.0;
  std::vector<bool> open;
};

// Parsers throw DataError("<path>:<line>: ...") on malformed input.

/// `frame,f0,...,f{D-1}`, frames strictly increasing.
FeatureStream load_feature_csv(const std::filesystem::path& path, const std::string& video_id, Modality modality,
                               double fps);
void write_feature_csv(const std::filesystem::path& path, const FeatureStream& stream);

/// `start_frame,end_frame,f0,...`, half-open intervals sorted by start.
SegmentStream load_segment_csv(const std::filesystem::path& path, const std::string& video_id, Modality modality);
void write_segment_csv(const std::filesystem::path& path, const SegmentStream& stream);

/// `frame,valence,arousal`. Frames absent from the file are filled with the sentinel.
AnnotationTrack load_annotations(const std::filesystem::path& path, const std::string& video_id, double sentinel);
void write_annotations(const std::filesystem::path& path, const AnnotationTrack& track);

/// `frame,open` with open in {0,1}; frames must be 0..N-1 in order.
MouthSeries load_mouth_csv(const std::filesystem::path& path, const std::string& video_id, double fps);
void write_mouth_csv(const std::filesystem::path& path, const MouthSeries& series);

/// `frame,valence,arousal`, values clipped to [-1,1].
void write_predictions_csv(const std::filesystem::path& path, const std::map<std::size_t, std::array<double, 2>>& rows);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace vaf
