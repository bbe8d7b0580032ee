#include "vafusion/filter/speech_filter.hpp"

#include <fstream>

#include "vafusion/errors.hpp"

namespace vaf {

void FilterConfig::validate() const {
  if (max_gap_s < 0.0 || min_burst_s < 0.0 || min_open_s_per_segment < 0.0) {
    throw ConfigError("filter: thresholds must be nonnegative");
  }
  if (min_coverage_frac < 0.0 || min_coverage_frac > 1.0) throw ConfigError("filter: min_coverage_frac must be in [0,1]");
}

namespace {

// Sets runs of `value` that are shorter than `limit` frames to !value.
// With `interior_only` a run touching either end of the series is left alone.
void flip_short_runs(std::vector<bool>& s, bool value, double limit, bool interior_only) {
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    if (s[i] != value) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && s[j] == value) ++j;
    const bool interior = i > 0 && j < n;
    if (static_cast<double>(j - i) < limit && (interior || !interior_only)) {
      for (std::size_t k = i; k < j; ++k) s[k] = !value;
    }
    i = j;
  }
}

}  // namespace

std::vector<bool> smooth_series(const std::vector<bool>& open, double fps, const FilterConfig& cfg) {
  std::vector<bool> s = open;
  flip_short_runs(s, false, cfg.max_gap_s * fps, true);
  flip_short_runs(s, true, cfg.min_burst_s * fps, false);
  return s;
}

std::string_view to_string(FilterReason r) {
  switch (r) {
    case FilterReason::ok: return "ok";
    case FilterReason::open_duration: return "open duration";
    case FilterReason::coverage: return "coverage";
    case FilterReason::open_duration_and_coverage: return "open duration+coverage";
  }
  return "?";
}

FilterDecision keep_segment(const AudioSegment& segment, const std::vector<bool>& smoothed, double fps,
                            const AnnotationTrack& annotations, const FilterConfig& cfg) {
  const std::size_t begin = seconds_to_start_frame(segment.start_s, fps);
  const std::size_t end = seconds_to_end_frame(segment.end_s, fps);
  const Mask valid = annotations.valid();
  std::size_t open = 0, labeled = 0;
  for (std::size_t f = begin; f < end; ++f) {
    if (f < smoothed.size() && smoothed[f]) ++open;
    if (f < annotations.frames() && valid(f, 0) && valid(f, 1)) ++labeled;
  }
  FilterDecision d;
  const std::size_t frames = end > begin ? end - begin : 0;
  d.open_s = static_cast<double>(open) / fps;
  d.coverage = frames > 0 ? static_cast<double>(labeled) / static_cast<double>(frames) : 0.0;
  const bool open_ok = d.open_s >= cfg.min_open_s_per_segment;
  const bool cover_ok = d.coverage >= cfg.min_coverage_frac;
  d.keep = open_ok && cover_ok;
  if (!open_ok && !cover_ok) d.reason = FilterReason::open_duration_and_coverage;
  else if (!open_ok) d.reason = FilterReason::open_duration;
  else if (!cover_ok) d.reason = FilterReason::coverage;
  return d;
}

std::vector<FilterReportRow> filter_video(const MouthSeries& mouth, const AnnotationTrack& annotations,
                                          const FilterConfig& cfg, double window_s, double hop_s) {
  cfg.validate();
  if (mouth.open.empty()) throw DataError("filter: mouth series for '" + mouth.video_id + "' is empty");
  const std::vector<bool> smoothed = smooth_series(mouth.open, mouth.fps, cfg);
  const double duration = static_cast<double>(mouth.open.size()) / mouth.fps;
  std::vector<FilterReportRow> rows;
  for (const AudioSegment& seg : segment_audio(duration, window_s, hop_s)) {
    rows.push_back({mouth.video_id, seg, keep_segment(seg, smoothed, mouth.fps, annotations, cfg)});
  }
  return rows;
}

void write_filter_report(const std::filesystem::path& path, const std::vector<FilterReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "video_id,start_s,end_s,keep,reason\n";
  for (const auto& r : rows) {
    out << r.video_id << ',' << format_double(r.segment.start_s) << ',' << format_double(r.segment.end_s) << ','
        << (r.decision.keep ? 1 : 0) << ',' << to_string(r.decision.reason) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace vaf
