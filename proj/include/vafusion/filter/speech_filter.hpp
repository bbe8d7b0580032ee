#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vafusion/dataio/csv_io.hpp"
#include "vafusion/dataio/streams.hpp"
#include "vafusion/dataio/windows.hpp"

namespace vaf {

struct FilterConfig {
  double max_gap_s = 0.5;
  double min_burst_s = 0.3;
  double min_open_s_per_segment = 1.0;
  double min_coverage_frac = 0.5;

  void validate() const;
};

/// Closing then opening on a boolean series. A false run strictly shorter than
/// max_gap_s * fps frames with true on both sides is filled; afterwards a true
/// run strictly shorter than min_burst_s * fps frames is cleared.
std::vector<bool> smooth_series(const std::vector<bool>& open, double fps, const FilterConfig& cfg);

enum class FilterReason { ok, open_duration, coverage, open_duration_and_coverage };
std::string_view to_string(FilterReason r);

struct FilterDecision {
  bool keep = false;
  FilterReason reason = FilterReason::ok;
  double open_s = 0.0;
  double coverage = 0.0;
};

/// Keeps a segment when its open-mouth time reaches min_open_s_per_segment and
/// the fraction of its frames with both labels valid reaches min_coverage_frac.
/// Frames of the segment past the end of either series count as closed and unlabeled.
FilterDecision keep_segment(const AudioSegment& segment, const std::vector<bool>& smoothed, double fps,
                            const AnnotationTrack& annotations, const FilterConfig& cfg);

struct FilterReportRow {
  std::string video_id;
  AudioSegment segment;
  FilterDecision decision;
};

/// Segments and decides every 4 s / 2 s window of one video.
std::vector<FilterReportRow> filter_video(const MouthSeries& mouth, const AnnotationTrack& annotations,
                                          const FilterConfig& cfg, double window_s = 4.0, double hop_s = 2.0);

/// `video_id,start_s,end_s,keep,reason`
void write_filter_report(const std::filesystem::path& path, const std::vector<FilterReportRow>& rows);

}  // namespace vaf
