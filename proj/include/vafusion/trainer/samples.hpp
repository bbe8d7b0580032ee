#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "vafusion/trainer/config.hpp"
#include "vafusion/trainer/dataset.hpp"

namespace vaf {

/// One model input with its targets. Output row i of the model covers the video
/// frames [spans[i].first, spans[i].second); padding rows have an empty span.
struct Sample {
  std::size_t video = 0;  // index into Dataset::videos
  std::vector<NumArray> inputs;
  std::vector<Mask> masks;  // [1 x rows] validity per input
  NumArray targets;         // [P x 2]
  Mask valid;               // [P x 2]
  std::vector<std::pair<std::size_t, std::size_t>> spans;
};

/// Modality names a model kind consumes, in input order.
std::vector<std::string> input_modalities(const TrainConfig& cfg);

/// Builds every sample of the given videos. Training samples use the training
/// strides, drop audio segments rejected by the speech filter when it is enabled,
/// and skip samples without two valid frames in either dimension.
std::vector<Sample> build_samples(const TrainConfig& cfg, const Dataset& data, const std::vector<std::size_t>& videos,
                                  bool training);

/// Mean of the valid targets over [begin, end) per dimension; invalid when none is valid.
std::pair<std::array<double, 2>, std::array<bool, 2>> span_target(const AnnotationTrack& ann, std::size_t begin,
                                                                   std::size_t end);

}  // namespace vaf
