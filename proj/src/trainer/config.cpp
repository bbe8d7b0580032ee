#include "vafusion/trainer/config.hpp"

#include <fstream>
#include <set>

#include "vafusion/errors.hpp"

namespace vaf {

using nlohmann::json;

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::face: return "face";
    case ModelKind::behavior: return "behavior";
    case ModelKind::audio: return "audio";
    case ModelKind::dcmmoe: return "dcmmoe";
    case ModelKind::raav: return "raav";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (ModelKind k : {ModelKind::face, ModelKind::behavior, ModelKind::audio, ModelKind::dcmmoe, ModelKind::raav}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected face, behavior, audio, dcmmoe or raav)");
}

double TrainConfig::effective_learning_rate() const {
  if (learning_rate) return *learning_rate;
  switch (model_kind) {
    case ModelKind::behavior: return behavior_modality == Modality::behavior_visual ? 1e-4 : 3e-4;
    case ModelKind::audio: return 2e-4;
    default: return 1e-4;
  }
}

double TrainConfig::effective_weight_decay() const {
  if (weight_decay) return *weight_decay;
  if (model_kind == ModelKind::behavior) return behavior_modality == Modality::behavior_visual ? 1e-4 : 1e-3;
  return 0.01;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (effective_learning_rate() < 0.0) throw ConfigError("learning_rate must be nonnegative");
  if (effective_weight_decay() < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (schedule.factor <= 0.0 || schedule.factor >= 1.0) throw ConfigError("schedule.factor must be in (0,1)");
  if (schedule.min_lr < 0.0) throw ConfigError("schedule.min_lr must be nonnegative");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be nonnegative (0 disables clipping)");
  if (window.length == 0 || window.stride == 0) throw ConfigError("window length and stride must be positive");
  auto no_gaps = [](std::size_t stride, std::size_t length, const char* what) {
    if (stride > length) throw ConfigError(std::string(what) + " must not exceed its window length");
  };
  no_gaps(window.stride, window.length, "window.stride");
  no_gaps(window.train_stride, window.length, "window.train_stride");
  no_gaps(face.stride, face.window_len, "face.stride");
  no_gaps(face_train_stride, face.window_len, "face.train_stride");
  no_gaps(behavior.stride, behavior.window_len, "behavior.stride");
  if (audio_window_s <= 0.0 || audio_hop_s <= 0.0) throw ConfigError("audio window and hop must be positive");
  if (behavior_modality != Modality::behavior_visual && behavior_modality != Modality::behavior_multimodal) {
    throw ConfigError("behavior.modality must be behavior_visual or behavior_multimodal");
  }
  loss.validate();
  filter.validate();
}

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() = default;

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return false;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }
  const json* section(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  Reader r(j, "config");
  std::string model = std::string(to_string(c.model_kind));
  r.get("model", model);
  c.model_kind = model_kind_from_string(model);
  r.get("batch_size", c.batch_size);
  double value = 0.0;
  if (r.get("learning_rate", value)) c.learning_rate = value;
  if (r.get("weight_decay", value)) c.weight_decay = value;
  r.get("max_epochs", c.max_epochs);
  r.get("grad_clip", c.grad_clip);
  r.get("seed", c.seed);
  r.get("per_video_metrics", c.per_video_metrics);

  if (const json* s = r.section("schedule")) {
    Reader q(*s, "schedule");
    q.get("factor", c.schedule.factor);
    q.get("patience", c.schedule.patience);
    q.get("min_lr", c.schedule.min_lr);
    q.finish();
  }
  if (const json* s = r.section("loss")) {
    Reader q(*s, "loss");
    q.get("weight_valence", c.loss.weight_valence);
    q.get("weight_arousal", c.loss.weight_arousal);
    q.get("lambda_ccc", c.loss.lambda_ccc);
    q.get("invalid_sentinel", c.loss.invalid_sentinel);
    q.finish();
  }
  if (const json* s = r.section("face")) {
    Reader q(*s, "face");
    q.get("model_dim", c.face.model_dim);
    q.get("num_layers", c.face.num_layers);
    q.get("num_heads", c.face.num_heads);
    q.get("window_len", c.face.window_len);
    q.get("stride", c.face.stride);
    q.get("train_stride", c.face_train_stride);
    q.get("ffn_dim", c.face.ffn_dim);
    q.get("head_dim", c.face.head_dim);
    q.get("dropout", c.face.dropout_p);
    q.finish();
  }
  if (const json* s = r.section("behavior")) {
    Reader q(*s, "behavior");
    std::string preset, modality = std::string(to_string(c.behavior_modality));
    q.get("modality", modality);
    c.behavior_modality = modality_from_string(modality);
    q.get("preset", preset);
    if (preset.empty()) preset = c.behavior_modality == Modality::behavior_visual ? "visual" : "multimodal";
    if (preset == "visual") c.behavior = BehaviorHeadConfig::visual_preset(256);
    else if (preset == "multimodal") c.behavior = BehaviorHeadConfig::multimodal_preset(256);
    else throw ConfigError("behavior.preset must be 'visual' or 'multimodal'");
    q.get("num_layers", c.behavior.num_layers);
    q.get("hidden_dim", c.behavior.hidden_dim);
    q.get("state_size", c.behavior.state_size);
    q.get("kernel_size", c.behavior.kernel_size);
    q.get("head_dim", c.behavior.head_dim);
    q.get("window_len", c.behavior.window_len);
    q.get("stride", c.behavior.stride);
    q.get("dropout", c.behavior.dropout_p);
    q.finish();
  }
  if (const json* s = r.section("audio")) {
    Reader q(*s, "audio");
    q.get("num_chunks", c.audio.num_chunks);
    q.get("attention_dim", c.audio.attention_dim);
    q.get("hidden_dim", c.audio.hidden_dim);
    q.get("dropout", c.audio.head_dropout_p);
    q.get("window_s", c.audio_window_s);
    q.get("hop_s", c.audio_hop_s);
    q.finish();
  }
  if (const json* s = r.section("filter")) {
    Reader q(*s, "filter");
    q.get("enabled", c.filter_enabled);
    q.get("max_gap_s", c.filter.max_gap_s);
    q.get("min_burst_s", c.filter.min_burst_s);
    q.get("min_open_s_per_segment", c.filter.min_open_s_per_segment);
    q.get("min_coverage_frac", c.filter.min_coverage_frac);
    q.finish();
  }
  if (const json* s = r.section("window")) {
    Reader q(*s, "window");
    q.get("length", c.window.length);
    q.get("stride", c.window.stride);
    q.get("train_stride", c.window.train_stride);
    q.finish();
  }
  c.dcmmoe.modality_names = {"face", "behavior", "audio"};
  if (const json* s = r.section("dcmmoe")) {
    Reader q(*s, "dcmmoe");
    q.get("modalities", c.dcmmoe.modality_names);
    q.get("model_dim", c.dcmmoe.model_dim);
    q.get("num_layers", c.dcmmoe.num_layers);
    q.get("num_heads", c.dcmmoe.num_heads);
    q.get("ffn_dim", c.dcmmoe.ffn_dim);
    q.get("dropout", c.dcmmoe.dropout_p);
    std::string inputs = "features";
    q.get("inputs", inputs);
    if (inputs == "features") c.fusion_inputs = FusionInputs::features;
    else if (inputs == "head_outputs") c.fusion_inputs = FusionInputs::head_outputs;
    else throw ConfigError("dcmmoe.inputs must be 'features' or 'head_outputs'");
    std::map<std::string, std::string> heads;
    q.get("head_checkpoints", heads);
    for (const auto& [k, v] : heads) c.head_checkpoints[k] = v;
    q.finish();
  }
  if (const json* s = r.section("raav")) {
    Reader q(*s, "raav");
    q.get("visual", c.raav.visual_names);
    q.get("model_dim", c.raav.model_dim);
    q.get("num_latents", c.raav.num_latents);
    q.get("encoder_layers", c.raav.encoder_layers);
    q.get("num_heads", c.raav.num_heads);
    q.get("ffn_dim", c.raav.ffn_dim);
    q.get("head_dim", c.raav.head_dim);
    q.get("dropout", c.raav.dropout_p);
    q.get("use_audio", c.raav.use_audio);
    q.finish();
  }
  r.finish();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  TrainConfig c = train_config_from_json(j);
  const auto base = path.parent_path();
  for (auto& [name, p] : c.head_checkpoints) {
    if (p.is_relative()) p = base / p;
  }
  return c;
}

json to_json(const TrainConfig& c) {
  json heads = json::object();
  for (const auto& [k, v] : c.head_checkpoints) heads[k] = v.string();
  return {
      {"model", to_string(c.model_kind)},
      {"batch_size", c.batch_size},
      {"learning_rate", c.effective_learning_rate()},
      {"weight_decay", c.effective_weight_decay()},
      {"max_epochs", c.max_epochs},
      {"grad_clip", c.grad_clip},
      {"seed", c.seed},
      {"per_video_metrics", c.per_video_metrics},
      {"schedule", {{"factor", c.schedule.factor}, {"patience", c.schedule.patience}, {"min_lr", c.schedule.min_lr}}},
      {"loss",
       {{"weight_valence", c.loss.weight_valence},
        {"weight_arousal", c.loss.weight_arousal},
        {"lambda_ccc", c.loss.lambda_ccc},
        {"invalid_sentinel", c.loss.invalid_sentinel}}},
      {"face",
       {{"model_dim", c.face.model_dim},
        {"num_layers", c.face.num_layers},
        {"num_heads", c.face.num_heads},
        {"window_len", c.face.window_len},
        {"stride", c.face.stride},
        {"train_stride", c.face_train_stride},
        {"ffn_dim", c.face.ffn_dim},
        {"head_dim", c.face.head_dim},
        {"dropout", c.face.dropout_p}}},
      {"behavior",
       {{"modality", to_string(c.behavior_modality)},
        {"num_layers", c.behavior.num_layers},
        {"hidden_dim", c.behavior.hidden_dim},
        {"state_size", c.behavior.state_size},
        {"kernel_size", c.behavior.kernel_size},
        {"head_dim", c.behavior.head_dim},
        {"window_len", c.behavior.window_len},
        {"stride", c.behavior.stride},
        {"dropout", c.behavior.dropout_p}}},
      {"audio",
       {{"num_chunks", c.audio.num_chunks},
        {"attention_dim", c.audio.attention_dim},
        {"hidden_dim", c.audio.hidden_dim},
        {"dropout", c.audio.head_dropout_p},
        {"window_s", c.audio_window_s},
        {"hop_s", c.audio_hop_s}}},
      {"filter",
       {{"enabled", c.filter_enabled},
        {"max_gap_s", c.filter.max_gap_s},
        {"min_burst_s", c.filter.min_burst_s},
        {"min_open_s_per_segment", c.filter.min_open_s_per_segment},
        {"min_coverage_frac", c.filter.min_coverage_frac}}},
      {"window", {{"length", c.window.length}, {"stride", c.window.stride}, {"train_stride", c.window.train_stride}}},
      {"dcmmoe",
       {{"modalities", c.dcmmoe.modality_names},
        {"model_dim", c.dcmmoe.model_dim},
        {"num_layers", c.dcmmoe.num_layers},
        {"num_heads", c.dcmmoe.num_heads},
        {"ffn_dim", c.dcmmoe.ffn_dim},
        {"dropout", c.dcmmoe.dropout_p},
        {"inputs", c.fusion_inputs == FusionInputs::features ? "features" : "head_outputs"},
        {"head_checkpoints", heads}}},
      {"raav",
       {{"visual", c.raav.visual_names},
        {"model_dim", c.raav.model_dim},
        {"num_latents", c.raav.num_latents},
        {"encoder_layers", c.raav.encoder_layers},
        {"num_heads", c.raav.num_heads},
        {"ffn_dim", c.raav.ffn_dim},
        {"head_dim", c.raav.head_dim},
        {"dropout", c.raav.dropout_p},
        {"use_audio", c.raav.use_audio}}},
  };
}

}  // namespace vaf
