#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vafusion/dataio/streams.hpp"
#include "vafusion/filter/speech_filter.hpp"
#include "vafusion/fusion/dcmmoe.hpp"
#include "vafusion/fusion/raav.hpp"
#include "vafusion/heads/audio_head.hpp"
#include "vafusion/heads/behavior_head.hpp"
#include "vafusion/heads/face_head.hpp"
#include "vafusion/metrics/ccc.hpp"

namespace vaf {

enum class ModelKind { face, behavior, audio, dcmmoe, raav };
std::string_view to_string(ModelKind k);
/// Throws ConfigError on an unknown name.
ModelKind model_kind_from_string(std::string_view s);

struct PlateauConfig {
  double factor = 0.5;
  std::size_t patience = 3;
  double min_lr = 1e-6;
};

/// Frame windows used by the fusion models.
struct FusionWindowConfig {
  std::size_t length = 400;
  std::size_t stride = 150;
  /// Stride for training windows; 0 reuses `stride`.
  std::size_t train_stride = 0;
};

/// What a fusion model sees per modality: the stored feature streams, or the
/// per-frame predictions of already trained unimodal heads (kept frozen).
enum class FusionInputs { features, head_outputs };

struct TrainConfig {
  ModelKind model_kind = ModelKind::face;
  std::size_t batch_size = 8;
  std::optional<double> learning_rate;  // unset selects the per-model default
  std::optional<double> weight_decay;
  std::size_t max_epochs = 50;
  PlateauConfig schedule;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  LossConfig loss;

  FaceHeadConfig face;
  /// Stride for face training windows; 0 reuses face.stride.
  std::size_t face_train_stride = 0;
  BehaviorHeadConfig behavior = BehaviorHeadConfig::multimodal_preset(256);
  /// Which behavior stream to read: behavior_visual or behavior_multimodal.
  Modality behavior_modality = Modality::behavior_multimodal;
  AudioHeadConfig audio;
  double audio_window_s = 4.0;
  double audio_hop_s = 2.0;
  FilterConfig filter;
  bool filter_enabled = false;

  FusionWindowConfig window;
  DcmmoeConfig dcmmoe;
  RaavConfig raav;
  FusionInputs fusion_inputs = FusionInputs::features;
  /// Unimodal checkpoints by modality name (face, behavior, audio) for head_outputs.
  std::map<std::string, std::filesystem::path> head_checkpoints;

  /// Also report the mean of per-video CCCs in evaluation.
  bool per_video_metrics = true;

  double effective_learning_rate() const;
  double effective_weight_decay() const;
  void validate() const;
};

/// Reads a JSON configuration. Unknown keys are rejected so typos surface.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);
nlohmann::json to_json(const TrainConfig& cfg);

}  // namespace vaf
