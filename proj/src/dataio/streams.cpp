#include "vafusion/dataio/streams.hpp"

#include <algorithm>
#include <cmath>

#include "vafusion/errors.hpp"

namespace vaf {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::face: return "face";
    case Modality::behavior_visual: return "behavior_visual";
    case Modality::behavior_multimodal: return "behavior_multimodal";
    case Modality::audio: return "audio";
  }
  return "unknown";
}

Modality modality_from_string(std::string_view s) {
  if (s == "face") return Modality::face;
  if (s == "behavior_visual") return Modality::behavior_visual;
  if (s == "behavior_multimodal" || s == "behavior") return Modality::behavior_multimodal;
  if (s == "audio") return Modality::audio;
  throw ConfigError("unknown modality: " + std::string(s));
}

void FeatureStream::validate() const {
  if (fps <= 0.0) throw DataError(video_id + ": feature rate must be positive");
  for (const auto& [idx, v] : frames) {
    if (v.size() != dim) {
      throw DataError(video_id + ": frame " + std::to_string(idx) + " has " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(dim));
    }
  }
}

std::span<const double> frame_features(const FeatureStream& stream, std::size_t index) {
  if (stream.frames.empty()) throw DataError("frame_features: stream '" + stream.video_id + "' is empty");
  auto hi = stream.frames.lower_bound(index);
  if (hi != stream.frames.end() && hi->first == index) return hi->second;
  if (hi == stream.frames.begin()) return hi->second;
  auto lo = std::prev(hi);
  if (hi == stream.frames.end()) return lo->second;
  return (index - lo->first) <= (hi->first - index) ? std::span<const double>(lo->second)
                                                     : std::span<const double>(hi->second);
}

void SegmentStream::validate() const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start >= s.end) throw DataError(video_id + ": segment " + std::to_string(i) + " has start >= end");
    if (s.embedding.size() != dim) throw DataError(video_id + ": segment " + std::to_string(i) + " has wrong width");
    if (i && segments[i - 1].start > s.start) throw DataError(video_id + ": segments not sorted by start");
  }
}

Mask AnnotationTrack::valid() const {
  Mask m(values.rows(), values.cols(), false);
  for (std::size_t r = 0; r < values.rows(); ++r)
    for (std::size_t c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      m.set(r, c, v != sentinel && v >= -1.0 && v <= 1.0);
    }
  return m;
}

std::map<std::size_t, std::array<double, 2>> expand_segments(std::span<const SpanPrediction> predictions) {
  std::map<std::size_t, std::pair<std::array<double, 2>, std::size_t>> acc;
  for (const auto& p : predictions) {
    for (std::size_t f = p.start; f < p.end; ++f) {
      auto& [sum, count] = acc[f];
      sum[0] += p.value[0];
      sum[1] += p.value[1];
      ++count;
    }
  }
  std::map<std::size_t, std::array<double, 2>> out;
  for (const auto& [f, entry] : acc) {
    const double n = static_cast<double>(entry.second);
    out.emplace_hint(out.end(), f, std::array<double, 2>{entry.first[0] / n, entry.first[1] / n});
  }
  return out;
}

namespace {

// Copies the nearest covered row into uncovered rows (ties toward the earlier frame).
void fill_nearest(NumArray& values, const std::vector<bool>& covered) {
  const std::size_t n = covered.size(), dim = values.cols();
  std::vector<long> prev(n, -1), next(n, -1);
  long last = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i]) last = static_cast<long>(i);
    prev[i] = last;
  }
  last = -1;
  for (std::size_t i = n; i-- > 0;) {
    if (covered[i]) last = static_cast<long>(i);
    next[i] = last;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (covered[i]) continue;
    long src = -1;
    if (prev[i] < 0) src = next[i];
    else if (next[i] < 0) src = prev[i];
    else src = (static_cast<long>(i) - prev[i] <= next[i] - static_cast<long>(i)) ? prev[i] : next[i];
    if (src >= 0) std::copy_n(values.data() + src * dim, dim, values.data() + i * dim);
  }
}

}  // namespace

FrameAlignedFeatures expand_segment_embeddings(const SegmentStream& stream, std::size_t total_frames) {
  FrameAlignedFeatures out;
  out.values = NumArray::matrix(total_frames, stream.dim);
  out.covered.assign(total_frames, false);
  std::vector<std::size_t> counts(total_frames, 0);
  for (const auto& s : stream.segments) {
    for (std::size_t f = s.start; f < std::min(s.end, total_frames); ++f) {
      for (std::size_t c = 0; c < stream.dim; ++c) out.values(f, c) += s.embedding[c];
      ++counts[f];
    }
  }
  for (std::size_t f = 0; f < total_frames; ++f) {
    if (!counts[f]) continue;
    out.covered[f] = true;
    const double inv = 1.0 / static_cast<double>(counts[f]);
    for (std::size_t c = 0; c < stream.dim; ++c) out.values(f, c) *= inv;
  }
  fill_nearest(out.values, out.covered);
  return out;
}

FrameAlignedFeatures align_feature_stream(const FeatureStream& stream, std::size_t total_frames, double video_fps) {
  FrameAlignedFeatures out;
  out.values = NumArray::matrix(total_frames, stream.dim);
  out.covered.assign(total_frames, false);
  if (stream.frames.empty()) return out;
  const double ratio = stream.fps / video_fps;
  for (std::size_t f = 0; f < total_frames; ++f) {
    const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(f) * ratio + 1e-9));
    out.covered[f] = stream.frames.count(idx) > 0;
    auto v = frame_features(stream, idx);
    std::copy(v.begin(), v.end(), out.values.row(f).begin());
  }
  return out;
}

}  // namespace vaf
