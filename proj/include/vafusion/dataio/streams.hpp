#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vafusion/numerics/array.hpp"

namespace vaf {

enum class Modality { face, behavior_visual, behavior_multimodal, audio };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

/// Per-frame feature vectors of one modality of one video. Frames may be missing.
struct FeatureStream {
  std::string video_id;
  Modality modality = Modality::face;
  double fps = 25.0;
  std::size_t dim = 0;
  std::map<std::size_t, std::vector<double>> frames;

  bool empty() const { return frames.empty(); }
  /// Throws DataError when a vector does not have `dim` entries.
  void validate() const;
};

/// Vector at `index`, or at the nearest available frame (ties go to the earlier frame).
/// Throws DataError on an empty stream.
std::span<const double> frame_features(const FeatureStream& stream, std::size_t index);

struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::vector<double> embedding;
};

/// Segment-level embeddings with explicit half-open frame intervals.
struct SegmentStream {
  std::string video_id;
  Modality modality = Modality::behavior_multimodal;
  std::size_t dim = 0;
  std::vector<Segment> segments;

  void validate() const;
};

/// Frame-level valence/arousal targets; invalid entries hold `sentinel`.
struct AnnotationTrack {
  std::string video_id;
  NumArray values;  // [frames x 2]
  double sentinel = -5.0;

  std::size_t frames() const { return values.rows(); }
  Mask valid() const;
};

/// A prediction that applies to every frame of [start, end).
struct SpanPrediction {
  std::size_t start = 0;
  std::size_t end = 0;
  std::array<double, 2> value{0.0, 0.0};
};

/// Per-frame mean of all covering span predictions; frames with no cover are absent.
std::map<std::size_t, std::array<double, 2>> expand_segments(std::span<const SpanPrediction> predictions);

/// Frame-level view of a segment stream: per-frame mean of covering embeddings.
/// Uncovered frames copy the nearest covered frame and are marked invalid.
struct FrameAlignedFeatures {
  NumArray values;            // [frames x dim]
  std::vector<bool> covered;  // per frame
};
FrameAlignedFeatures expand_segment_embeddings(const SegmentStream& stream, std::size_t total_frames);

/// Frame-level view of a feature stream sampled at `stream.fps` for a video at `video_fps`.
/// Missing frames are filled by nearest frame and marked invalid. An empty stream gives zeros.
FrameAlignedFeatures align_feature_stream(const FeatureStream& stream, std::size_t total_frames, double video_fps);

}  // namespace vaf
