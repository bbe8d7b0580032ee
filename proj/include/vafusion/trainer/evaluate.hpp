#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vafusion/metrics/ccc.hpp"
#include "vafusion/trainer/models.hpp"

namespace vaf {

/// Eval-mode outputs for every sample, in sample order. Samples are independent,
/// so they may run on several threads without changing any output.
std::vector<NumArray> predict_samples(const Model& model, const std::vector<Sample>& samples);

struct FramePredictions {
  NumArray values;            // [frames x 2]
  std::vector<bool> covered;  // false where the value was copied from the nearest covered frame
};

/// Per-frame mean over every output row whose span covers the frame, for one video.
/// Frames no span covers take the nearest covered frame's value (ties go earlier);
/// a video without any covered frame gets zeros.
FramePredictions frame_predictions(const std::vector<Sample>& samples, const std::vector<NumArray>& outputs,
                                   std::size_t video, std::size_t frames);

struct VideoReport {
  std::string video_id;
  CccReport report;
};

struct EvalResult {
  /// CCC over the concatenated valid frames of every video.
  CccReport overall;
  /// Mean over videos of the per-video mean CCC (videos with two valid frames per dimension).
  std::optional<double> per_video_mean;
  std::vector<VideoReport> videos;
  /// Keyed by index into Dataset::videos.
  std::map<std::size_t, FramePredictions> predictions;

  nlohmann::json to_json() const;
};

/// Evaluates prebuilt (non-training) samples of `videos`. Throws DataError when no frame is valid.
EvalResult evaluate_samples(const Model& model, const Dataset& data, const std::vector<std::size_t>& videos,
                            const std::vector<Sample>& samples);

EvalResult evaluate_split(const Model& model, const TrainConfig& cfg, const Dataset& data, Split split);

}  // namespace vaf
