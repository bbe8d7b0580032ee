#include "vafusion/trainer/samples.hpp"

#include <algorithm>
#include <cmath>

#include "vafusion/dataio/windows.hpp"
#include "vafusion/errors.hpp"
#include "vafusion/filter/speech_filter.hpp"

namespace vaf {

std::vector<std::string> input_modalities(const TrainConfig& cfg) {
  switch (cfg.model_kind) {
    case ModelKind::face: return {"face"};
    case ModelKind::behavior: return {"behavior"};
    case ModelKind::audio: return {"audio"};
    case ModelKind::dcmmoe: return cfg.dcmmoe.modality_names;
    case ModelKind::raav: {
      std::vector<std::string> names = cfg.raav.visual_names;
      names.push_back("audio");
      return names;
    }
  }
  return {};
}

std::pair<std::array<double, 2>, std::array<bool, 2>> span_target(const AnnotationTrack& ann, std::size_t begin,
                                                                   std::size_t end) {
  const Mask valid = ann.valid();
  std::array<double, 2> sum{0.0, 0.0};
  std::array<std::size_t, 2> count{0, 0};
  end = std::min(end, ann.frames());
  for (std::size_t f = begin; f < end; ++f) {
    for (std::size_t d = 0; d < 2; ++d) {
      if (!valid(f, d)) continue;
      sum[d] += ann.values(f, d);
      ++count[d];
    }
  }
  std::array<double, 2> mean{0.0, 0.0};
  std::array<bool, 2> ok{false, false};
  for (std::size_t d = 0; d < 2; ++d) {
    if (count[d] == 0) continue;
    mean[d] = sum[d] / static_cast<double>(count[d]);
    ok[d] = true;
  }
  return {mean, ok};
}

namespace {

bool trainable(const Sample& s) {
  for (std::size_t d = 0; d < 2; ++d) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < s.valid.rows(); ++r) n += s.valid(r, d) ? 1 : 0;
    if (n >= 2) return true;
  }
  return false;
}

void set_frame_target(Sample& s, std::size_t row, const AnnotationTrack& ann, const Mask& ann_valid, std::size_t f) {
  s.spans[row] = {f, f + 1};
  for (std::size_t d = 0; d < 2; ++d) {
    s.targets(row, d) = ann_valid(f, d) ? ann.values(f, d) : 0.0;
    s.valid.set(row, d, ann_valid(f, d));
  }
}

void set_span_target(Sample& s, std::size_t row, const AnnotationTrack& ann, std::size_t begin, std::size_t end) {
  end = std::min(end, ann.frames());
  if (begin >= end) return;  // nothing of the video: stays padding
  s.spans[row] = {begin, end};
  auto [mean, ok] = span_target(ann, begin, end);
  for (std::size_t d = 0; d < 2; ++d) {
    s.targets(row, d) = mean[d];
    s.valid.set(row, d, ok[d]);
  }
}

Sample blank(std::size_t video, std::size_t rows) {
  Sample s;
  s.video = video;
  s.targets = NumArray::matrix(rows, 2);
  s.valid = Mask(rows, 2, false);
  s.spans.assign(rows, {0, 0});
  return s;
}

// Frame windows over aligned streams; rows past the end repeat the last frame and are masked.
void frame_windows(const TrainConfig& cfg, const Dataset& data, std::size_t vi, const std::vector<std::string>& names,
                   std::size_t length, std::size_t stride, bool training, std::vector<Sample>& out) {
  const VideoData& v = data.videos[vi];
  const std::size_t total = v.frames();
  std::vector<FrameAlignedFeatures> streams;
  bool any = false;
  for (const auto& name : names) {
    auto it = data.dims.find(name);
    if (it == data.dims.end()) throw DataError("no video in the corpus provides the '" + name + "' modality");
    streams.push_back(aligned_stream(v, name, it->second));
    any = any || std::find(streams.back().covered.begin(), streams.back().covered.end(), true) !=
                     streams.back().covered.end();
  }
  if (!any) return;
  const Mask ann_valid = v.annotations.valid();
  for (std::size_t start : make_windows(total, length, stride)) {
    Sample s = blank(vi, length);
    for (const auto& st : streams) {
      NumArray x = NumArray::matrix(length, st.values.cols());
      Mask m(1, length, false);
      for (std::size_t r = 0; r < length; ++r) {
        const std::size_t f = std::min(start + r, total - 1);
        std::copy(st.values.row(f).begin(), st.values.row(f).end(), x.row(r).begin());
        m.set(0, r, start + r < total && st.covered[f]);
      }
      s.inputs.push_back(std::move(x));
      s.masks.push_back(std::move(m));
    }
    for (std::size_t r = 0; r < length && start + r < total; ++r) set_frame_target(s, r, v.annotations, ann_valid, start + r);
    if (cfg.model_kind == ModelKind::face) {
      // The face head attends over real frames; missing ones carry their nearest fill.
      for (std::size_t r = 0; r < length; ++r) s.masks[0].set(0, r, start + r < total);
    }
    if (training && cfg.model_kind == ModelKind::raav) {
      // Frames without any visual modality carry no fused token; keep them out of the loss.
      const std::size_t visual = cfg.raav.visual_names.size();
      for (std::size_t r = 0; r < length; ++r) {
        bool seen = false;
        for (std::size_t m = 0; m < visual; ++m) seen = seen || s.masks[m](0, r);
        if (!seen) {
          s.valid.set(r, 0, false);
          s.valid.set(r, 1, false);
        }
      }
    }
    if (training && !trainable(s)) continue;
    out.push_back(std::move(s));
  }
}

void behavior_windows(const TrainConfig& cfg, const Dataset& data, std::size_t vi, bool training,
                      std::vector<Sample>& out) {
  const VideoData& v = data.videos[vi];
  if (!v.behavior || v.behavior->segments.empty()) return;
  const auto& segs = v.behavior->segments;
  const std::size_t n = segs.size();
  const std::size_t len = cfg.behavior.window_len;
  const std::size_t dim = v.behavior->dim;
  for (std::size_t start : make_windows(n, len, cfg.behavior.stride)) {
    Sample s = blank(vi, len);
    NumArray x = NumArray::matrix(len, dim);
    Mask m(1, len, false);
    // Short streams are left-padded with the first segment so real positions stay last.
    const std::size_t pad = n < len ? len - n : 0;
    for (std::size_t r = 0; r < len; ++r) {
      const bool real = r >= pad;
      const Segment& seg = segs[real ? start + r - pad : 0];
      std::copy(seg.embedding.begin(), seg.embedding.end(), x.row(r).begin());
      if (!real) continue;
      m.set(0, r, true);
      set_span_target(s, r, v.annotations, seg.start, seg.end);
    }
    s.inputs.push_back(std::move(x));
    s.masks.push_back(std::move(m));
    if (training && !trainable(s)) continue;
    out.push_back(std::move(s));
  }
}

void audio_segments(const TrainConfig& cfg, const Dataset& data, std::size_t vi, bool training,
                    std::vector<Sample>& out) {
  const VideoData& v = data.videos[vi];
  if (!v.audio || v.audio->empty()) return;
  const std::size_t chunks = cfg.audio.num_chunks;
  const double rate = v.audio_rate;
  std::size_t ts = static_cast<std::size_t>(std::ceil(cfg.audio_window_s * rate - 1e-9));
  ts = std::max(ts, chunks);
  ts = (ts + chunks - 1) / chunks * chunks;
  const double duration = static_cast<double>(v.frames()) / v.fps;
  const std::size_t audio_frames = seconds_to_end_frame(duration, rate);
  const std::size_t dim = v.audio->dim;

  std::vector<bool> smoothed;
  const bool filtering = training && cfg.filter_enabled && v.mouth.has_value();
  if (filtering) smoothed = smooth_series(v.mouth->open, v.mouth->fps, cfg.filter);

  const double bin_s = cfg.audio_window_s / static_cast<double>(chunks);
  for (const AudioSegment& seg : segment_audio(duration, cfg.audio_window_s, cfg.audio_hop_s)) {
    if (filtering && !keep_segment(seg, smoothed, v.mouth->fps, v.annotations, cfg.filter).keep) continue;
    Sample s = blank(vi, chunks);
    NumArray x = NumArray::matrix(ts, dim);
    Mask m(1, ts, false);
    const std::size_t first = seconds_to_start_frame(seg.start_s, rate);
    for (std::size_t r = 0; r < ts; ++r) {
      const std::size_t a = first + r;
      if (a >= audio_frames) continue;  // zero padding past the recording
      auto feat = frame_features(*v.audio, a);
      std::copy(feat.begin(), feat.end(), x.row(r).begin());
      m.set(0, r, v.audio->frames.count(a) > 0);
    }
    for (std::size_t c = 0; c < chunks; ++c) {
      const double b0 = seg.start_s + bin_s * static_cast<double>(c);
      set_span_target(s, c, v.annotations, seconds_to_start_frame(b0, v.fps), seconds_to_end_frame(b0 + bin_s, v.fps));
    }
    s.inputs.push_back(std::move(x));
    s.masks.push_back(std::move(m));
    if (training && !trainable(s)) continue;
    out.push_back(std::move(s));
  }
}

}  // namespace

std::vector<Sample> build_samples(const TrainConfig& cfg, const Dataset& data, const std::vector<std::size_t>& videos,
                                  bool training) {
  std::vector<Sample> out;
  for (std::size_t vi : videos) {
    switch (cfg.model_kind) {
      case ModelKind::face: {
        const std::size_t stride = training && cfg.face_train_stride > 0 ? cfg.face_train_stride : cfg.face.stride;
        frame_windows(cfg, data, vi, {"face"}, cfg.face.window_len, stride, training, out);
        break;
      }
      case ModelKind::behavior: behavior_windows(cfg, data, vi, training, out); break;
      case ModelKind::audio: audio_segments(cfg, data, vi, training, out); break;
      case ModelKind::dcmmoe:
      case ModelKind::raav: {
        const std::size_t stride = training && cfg.window.train_stride > 0 ? cfg.window.train_stride : cfg.window.stride;
        frame_windows(cfg, data, vi, input_modalities(cfg), cfg.window.length, stride, training, out);
        break;
      }
    }
  }
  return out;
}

}  // namespace vaf
