#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "vafusion/trainer/checkpoint.hpp"
#include "vafusion/trainer/evaluate.hpp"
#include "vafusion/trainer/optimizer.hpp"

namespace vaf {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  CccReport dev;
  std::optional<double> dev_per_video;
  double learning_rate = 0.0;
  bool improved = false;

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  std::filesystem::path checkpoint;  // empty when training without an output directory
};

/// A model rebuilt from a checkpoint together with the configuration it was trained under.
struct TrainedModel {
  std::unique_ptr<Model> model;
  TrainConfig config;
  InputDims dims;
};

/// Loads the corpus for `cfg`; with head_outputs fusion inputs, each configured
/// unimodal checkpoint is run over every video and replaces that modality's stream.
Dataset prepare_dataset(const Manifest& manifest, const TrainConfig& cfg);

/// Replaces each fusion modality's stream by its frozen head's per-frame predictions.
void attach_head_outputs(Dataset& data, const TrainConfig& cfg);

/// Trains on the train split, selecting by devel mean CCC. With a non-empty
/// `out_dir` the best checkpoint goes to out_dir/checkpoint.bin and one JSON line
/// per epoch to out_dir/metrics.jsonl.
TrainResult train_model(const TrainConfig& cfg, const Dataset& data, const std::filesystem::path& out_dir);

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const InputDims& dims, const AdamW* opt,
                           std::size_t epoch, std::optional<double> best);
TrainedModel load_trained(const std::filesystem::path& checkpoint);
TrainedModel load_trained(const Checkpoint& checkpoint);

}  // namespace vaf
