#include "vafusion/trainer/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "vafusion/errors.hpp"

namespace vaf {

nlohmann::json EpochRecord::to_json() const {
  return {
      {"epoch", epoch},
      {"train_loss", train_loss},
      {"dev_ccc_valence", dev.ccc_valence},
      {"dev_ccc_arousal", dev.ccc_arousal},
      {"dev_ccc_mean", dev.mean},
      {"dev_per_video_ccc_mean", dev_per_video ? nlohmann::json(*dev_per_video) : nlohmann::json(nullptr)},
      {"lr", learning_rate},
      {"improved", improved},
  };
}

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const InputDims& dims, const AdamW* opt,
                           std::size_t epoch, std::optional<double> best) {
  Checkpoint c;
  c.arch = std::string(to_string(model.kind()));
  c.config = {{"train", to_json(cfg)}, {"input_dims", dims}};
  c.tensors = snapshot_parameters(model.parameters());
  if (opt) {
    c.adam_steps = opt->steps();
    std::size_t i = 0;
    for (const Parameter& p : model.parameters()) {
      c.moments.emplace_back(p.name, std::make_pair(opt->first_moments()[i], opt->second_moments()[i]));
      ++i;
    }
  }
  c.epoch = epoch;
  c.best_metric = best;
  return c;
}

TrainedModel load_trained(const Checkpoint& ckpt) {
  TrainedModel t;
  try {
    t.config = train_config_from_json(ckpt.config.at("train"));
    t.dims = ckpt.config.at("input_dims").get<InputDims>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config block is malformed: ") + e.what());
  }
  if (to_string(t.config.model_kind) != ckpt.arch) {
    throw DataError("checkpoint architecture tag '" + ckpt.arch + "' disagrees with its config");
  }
  t.model = make_model(t.config, t.dims);
  restore_parameters(ckpt.tensors, t.model->parameters());
  return t;
}

TrainedModel load_trained(const std::filesystem::path& checkpoint) { return load_trained(load_checkpoint(checkpoint)); }

void attach_head_outputs(Dataset& data, const TrainConfig& cfg) {
  if (cfg.model_kind != ModelKind::dcmmoe || cfg.fusion_inputs != FusionInputs::head_outputs) return;
  std::vector<std::size_t> all(data.videos.size());
  std::iota(all.begin(), all.end(), 0);
  std::map<std::string, std::vector<FrameAlignedFeatures>> replaced;
  for (const std::string& name : cfg.dcmmoe.modality_names) {
    auto it = cfg.head_checkpoints.find(name);
    if (it == cfg.head_checkpoints.end()) throw ConfigError("dcmmoe.head_checkpoints has no entry for '" + name + "'");
    TrainedModel head = load_trained(it->second);
    if (to_string(head.model->kind()) != name) {
      throw ConfigError("head checkpoint for '" + name + "' holds a " + std::string(to_string(head.model->kind())) +
                        " model");
    }
    const auto samples = build_samples(head.config, data, all, false);
    const auto outputs = predict_samples(*head.model, samples);
    auto& streams = replaced[name];
    for (std::size_t vi : all) {
      FramePredictions fp = frame_predictions(samples, outputs, vi, data.videos[vi].frames());
      FrameAlignedFeatures f;
      f.values = std::move(fp.values);
      f.covered = aligned_stream(data.videos[vi], name, data.dims.at(name)).covered;
      streams.push_back(std::move(f));
    }
    spdlog::info("using frozen {} head outputs from {}", name, it->second.string());
  }
  for (auto& [name, streams] : replaced) {
    for (std::size_t vi : all) data.videos[vi].aligned_override[name] = std::move(streams[vi]);
    data.dims[name] = 2;
  }
}

Dataset prepare_dataset(const Manifest& manifest, const TrainConfig& cfg) {
  Dataset data = load_dataset(manifest, cfg.behavior_modality, cfg.loss.invalid_sentinel);
  attach_head_outputs(data, cfg);
  return data;
}

TrainResult train_model(const TrainConfig& cfg, const Dataset& data, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto train_idx = data.indices(Split::train);
  const auto dev_idx = data.indices(Split::devel);
  if (train_idx.empty() || dev_idx.empty()) throw DataError("training needs both train and devel videos");
  const std::vector<Sample> train_samples = build_samples(cfg, data, train_idx, true);
  const std::vector<Sample> dev_samples = build_samples(cfg, data, dev_idx, false);
  if (train_samples.empty()) throw DataError("the train split yields no usable samples for this model");

  std::unique_ptr<Model> model = make_model(cfg, data.dims);
  ParameterSet& params = model->parameters();
  AdamW opt(params, {cfg.effective_learning_rate(), 0.9, 0.999, 1e-8, cfg.effective_weight_decay()});
  PlateauScheduler sched(cfg.schedule.factor, cfg.schedule.patience, cfg.schedule.min_lr);
  spdlog::info("training {} ({} parameters) on {} samples, {} devel samples", to_string(cfg.model_kind),
               params.scalar_count(), train_samples.size(), dev_samples.size());

  std::ofstream log;
  TrainResult result;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    log.open(out_dir / "metrics.jsonl", std::ios::trunc);
    if (!log) throw DataError("cannot write " + (out_dir / "metrics.jsonl").string());
    result.checkpoint = out_dir / "checkpoint.bin";
  }

  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x5eed5eedULL));
  std::vector<std::size_t> order(train_samples.size());
  std::optional<double> best;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = b0; i < b1; ++i) {
        const Sample& s = train_samples[order[i]];
        Context ctx = Context::training(splitmix64(cfg.seed ^ (epoch << 40) ^ i));
        HybridLoss hl = hybrid_loss(s.targets, model->forward(s, ctx), s.valid, cfg.loss);
        const double lv = hl.loss.value().item();
        if (!std::isfinite(lv)) {
          if (!out_dir.empty()) {
            save_checkpoint(out_dir / "last_good.bin", make_checkpoint(*model, cfg, data.dims, &opt, epoch - 1, best));
          }
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on a window of video '" +
                             data.videos[s.video].id + "'" +
                             (out_dir.empty() ? std::string() : "; parameters saved to last_good.bin"));
        }
        batch_loss += lv * inv;
        backward(scale(hl.loss, inv));
      }
      clip_grad_norm(params, cfg.grad_clip);
      opt.step(params);
      loss_sum += batch_loss;
      ++batches;
    }

    const EvalResult dev = evaluate_samples(*model, data, dev_idx, dev_samples);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.dev = dev.overall;
    rec.dev_per_video = dev.per_video_mean;
    rec.learning_rate = opt.learning_rate();
    rec.improved = !best || dev.overall.mean > *best;
    if (rec.improved) {
      best = dev.overall.mean;
      result.best_epoch = epoch;
      result.best_metric = *best;
      if (!out_dir.empty()) save_checkpoint(result.checkpoint, make_checkpoint(*model, cfg, data.dims, &opt, epoch, best));
    }
    spdlog::info("epoch {:3d} loss {:.4f} dev ccc v {:.4f} a {:.4f} mean {:.4f} lr {:.2e}{}", epoch, rec.train_loss,
                 rec.dev.ccc_valence, rec.dev.ccc_arousal, rec.dev.mean, rec.learning_rate,
                 rec.improved ? " *" : "");
    if (log) log << rec.to_json().dump() << '\n' << std::flush;
    result.epochs.push_back(rec);
    opt.set_learning_rate(sched.step(dev.overall.mean, opt.learning_rate()));
  }
  return result;
}

}  // namespace vaf
