#pragma once

#include <memory>

#include <nlohmann/json.hpp>

#include "vafusion/trainer/config.hpp"
#include "vafusion/trainer/dataset.hpp"
#include "vafusion/trainer/samples.hpp"

namespace vaf {

/// A trainable model behind a uniform sample interface.
class Model {
 public:
  virtual ~Model() = default;
  virtual ModelKind kind() const = 0;
  /// [sample rows x 2] predictions, one row per entry of `sample.spans`.
  virtual Var forward(const Sample& sample, Context& ctx) const = 0;
  virtual ParameterSet& parameters() = 0;
  virtual const ParameterSet& parameters() const = 0;
};

/// Builds the model selected by `cfg.model_kind`; input widths come from `dims`.
/// Parameters are initialized from `cfg.seed`.
std::unique_ptr<Model> make_model(const TrainConfig& cfg, const InputDims& dims);

}  // namespace vaf
