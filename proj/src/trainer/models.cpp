#include "vafusion/trainer/models.hpp"

#include "vafusion/errors.hpp"

namespace vaf {

namespace {

std::size_t dim_of(const InputDims& dims, const std::string& name) {
  auto it = dims.find(name);
  if (it == dims.end()) throw DataError("the corpus has no '" + name + "' stream");
  return it->second;
}

void expect_inputs(const Sample& s, std::size_t n) {
  if (s.inputs.size() != n || s.masks.size() != n) throw ShapeError("sample does not match the model's inputs");
}

class FaceModel final : public Model {
 public:
  FaceModel(FaceHeadConfig cfg, std::uint64_t seed) : head_(cfg, seed) {}
  ModelKind kind() const override { return ModelKind::face; }
  Var forward(const Sample& s, Context& ctx) const override {
    expect_inputs(s, 1);
    return head_.forward(Var::constant(s.inputs[0]), ctx, &s.masks[0]);
  }
  ParameterSet& parameters() override { return head_.parameters(); }
  const ParameterSet& parameters() const override { return head_.parameters(); }

 private:
  FaceHead head_;
};

class BehaviorModel final : public Model {
 public:
  BehaviorModel(BehaviorHeadConfig cfg, std::uint64_t seed) : head_(cfg, seed) {}
  ModelKind kind() const override { return ModelKind::behavior; }
  Var forward(const Sample& s, Context& ctx) const override {
    expect_inputs(s, 1);
    return head_.forward(Var::constant(s.inputs[0]), ctx);
  }
  ParameterSet& parameters() override { return head_.parameters(); }
  const ParameterSet& parameters() const override { return head_.parameters(); }

 private:
  BehaviorHead head_;
};

class AudioModel final : public Model {
 public:
  AudioModel(AudioHeadConfig cfg, std::uint64_t seed) : head_(cfg, seed) {}
  ModelKind kind() const override { return ModelKind::audio; }
  Var forward(const Sample& s, Context& ctx) const override {
    expect_inputs(s, 1);
    return head_.forward(Var::constant(s.inputs[0]), ctx);
  }
  ParameterSet& parameters() override { return head_.parameters(); }
  const ParameterSet& parameters() const override { return head_.parameters(); }

 private:
  AudioHead head_;
};

class DcmmoeModel final : public Model {
 public:
  DcmmoeModel(DcmmoeConfig cfg, std::uint64_t seed) : net_(cfg, seed) {}
  ModelKind kind() const override { return ModelKind::dcmmoe; }
  Var forward(const Sample& s, Context& ctx) const override {
    const auto& names = net_.config().modality_names;
    expect_inputs(s, names.size());
    ModalityBundle b;
    b.names = names;
    for (std::size_t m = 0; m < names.size(); ++m) {
      b.features.push_back(Var::constant(s.inputs[m]));
      b.valid.push_back(s.masks[m]);
    }
    return net_.forward(b, ctx);
  }
  ParameterSet& parameters() override { return net_.parameters(); }
  const ParameterSet& parameters() const override { return net_.parameters(); }

 private:
  Dcmmoe net_;
};

class RaavModel final : public Model {
 public:
  RaavModel(RaavConfig cfg, std::uint64_t seed) : net_(cfg, seed) {}
  ModelKind kind() const override { return ModelKind::raav; }
  Var forward(const Sample& s, Context& ctx) const override {
    const std::size_t visual = net_.config().visual_names.size();
    expect_inputs(s, visual + 1);
    RaavInput in;
    for (std::size_t m = 0; m < visual; ++m) {
      in.visual.push_back(Var::constant(s.inputs[m]));
      in.visual_valid.push_back(s.masks[m]);
    }
    in.audio = Var::constant(s.inputs[visual]);
    in.audio_valid = s.masks[visual];
    return net_.forward(in, ctx);
  }
  ParameterSet& parameters() override { return net_.parameters(); }
  const ParameterSet& parameters() const override { return net_.parameters(); }

 private:
  Raav net_;
};

}  // namespace

std::unique_ptr<Model> make_model(const TrainConfig& cfg, const InputDims& dims) {
  switch (cfg.model_kind) {
    case ModelKind::face: {
      FaceHeadConfig c = cfg.face;
      c.input_dim = dim_of(dims, "face");
      return std::make_unique<FaceModel>(c, cfg.seed);
    }
    case ModelKind::behavior: {
      BehaviorHeadConfig c = cfg.behavior;
      c.input_dim = dim_of(dims, "behavior");
      return std::make_unique<BehaviorModel>(c, cfg.seed);
    }
    case ModelKind::audio: {
      AudioHeadConfig c = cfg.audio;
      c.input_dim = dim_of(dims, "audio");
      return std::make_unique<AudioModel>(c, cfg.seed);
    }
    case ModelKind::dcmmoe: {
      DcmmoeConfig c = cfg.dcmmoe;
      c.modality_dims.clear();
      for (const auto& name : c.modality_names) c.modality_dims.push_back(dim_of(dims, name));
      return std::make_unique<DcmmoeModel>(c, cfg.seed);
    }
    case ModelKind::raav: {
      RaavConfig c = cfg.raav;
      c.visual_dims.clear();
      for (const auto& name : c.visual_names) c.visual_dims.push_back(dim_of(dims, name));
      c.audio_dim = c.use_audio ? dim_of(dims, "audio") : (dims.count("audio") ? dims.at("audio") : 1);
      return std::make_unique<RaavModel>(c, cfg.seed);
    }
  }
  throw ConfigError("unknown model kind");
}

}  // namespace vaf
