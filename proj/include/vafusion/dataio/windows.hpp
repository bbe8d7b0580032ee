#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vaf {

/// A [start, start + length) frame slice of one video; the unit of batching.
struct Window {
  std::string video_id;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Window starts 0, S, 2S, ... while start + L <= T, plus a tail window at T - L
/// when the strided starts leave the last frames uncovered. For T < L the single
/// start 0 is returned and the caller pads. Throws ConfigError when S > L.
std::vector<std::size_t> make_windows(std::size_t total, std::size_t length, std::size_t stride);

struct AudioSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  /// Seconds past the end of the recording that are zero-padded.
  double padding_s = 0.0;
  bool padded() const { return padding_s > 0.0; }
};

/// Fixed-length segments starting at multiples of hop_s. Full segments are kept
/// while they fit; one more zero-padded segment covers any remainder.
std::vector<AudioSegment> segment_audio(double duration_s, double window_s = 4.0, double hop_s = 2.0);

/// First frame of a span starting at `seconds` (floor) and one past its last frame (ceil).
std::size_t seconds_to_start_frame(double seconds, double rate);
std::size_t seconds_to_end_frame(double seconds, double rate);

}  // namespace vaf
