#include "vafusion/dataio/windows.hpp"

#include <cmath>

#include "vafusion/errors.hpp"

namespace vaf {

namespace {
constexpr double kTimeEps = 1e-9;
}

std::vector<std::size_t> make_windows(std::size_t total, std::size_t length, std::size_t stride) {
  if (total == 0 || length == 0 || stride == 0) throw ConfigError("make_windows: T, L and S must be positive");
  if (stride > length) throw ConfigError("make_windows: a stride longer than the window would skip frames");
  if (total < length) return {0};
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + length <= total; s += stride) starts.push_back(s);
  if (starts.back() + length < total) starts.push_back(total - length);
  return starts;
}

std::vector<AudioSegment> segment_audio(double duration_s, double window_s, double hop_s) {
  if (!(duration_s > 0.0)) throw ConfigError("segment_audio: duration must be positive");
  if (!(window_s > 0.0) || !(hop_s > 0.0)) throw ConfigError("segment_audio: window and hop must be positive");
  std::vector<AudioSegment> out;
  std::size_t k = 0;
  for (;; ++k) {
    const double start = static_cast<double>(k) * hop_s;
    if (start + window_s > duration_s + kTimeEps) break;
    out.push_back({start, start + window_s, 0.0});
  }
  const double covered = out.empty() ? 0.0 : out.back().end_s;
  if (covered + kTimeEps < duration_s) {
    const double start = static_cast<double>(k) * hop_s;
    out.push_back({start, start + window_s, start + window_s - duration_s});
  }
  return out;
}

std::size_t seconds_to_start_frame(double seconds, double rate) {
  return static_cast<std::size_t>(std::floor(seconds * rate + kTimeEps));
}

std::size_t seconds_to_end_frame(double seconds, double rate) {
  return static_cast<std::size_t>(std::ceil(seconds * rate - kTimeEps));
}

}  // namespace vaf
