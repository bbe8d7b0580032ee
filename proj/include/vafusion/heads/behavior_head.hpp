#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vafusion/numerics/layers.hpp"

namespace vaf {

struct BehaviorHeadConfig {
  std::size_t input_dim = 256;  // segment embedding width d
  std::size_t num_layers = 12;
  std::size_t hidden_dim = 256;
  std::size_t state_size = 8;
  std::size_t kernel_size = 5;
  std::size_t head_dim = 512;
  std::size_t window_len = 16;
  std::size_t stride = 8;
  double dropout_p = 0.2;

  /// 4 layers, hidden 128, state 8, kernel 3, head 512.
  static BehaviorHeadConfig visual_preset(std::size_t input_dim);
  /// 12 layers, hidden 256, state 8, kernel 5, head 512.
  static BehaviorHeadConfig multimodal_preset(std::size_t input_dim);

  void validate() const;
};

/// A causal sequence block operating on [T x hidden].
class SequenceBlock {
 public:
  virtual ~SequenceBlock() = default;
  virtual Var forward(const Var& x, Context& ctx) const = 0;
};

/// Simplified state-space block:
///   xn = LN(x); u = silu(causal_conv(xn)); b_t = sigmoid(u_t W_b + c_b)
///   h_t = sigmoid(decay) * h_{t-1} + b_t * u_t;  y_t = readout . h_t
///   out = x + W_o (y * silu(xn W_z + c_z)) + c_o
/// Every step only looks backwards in time.
class SsmBlock final : public SequenceBlock {
 public:
  SsmBlock(ParameterSet& params, const std::string& name, std::size_t hidden, std::size_t state_size,
           std::size_t kernel_size, double dropout_p, Rng& rng);
  Var forward(const Var& x, Context& ctx) const override;

 private:
  LayerNormLayer norm_;
  Parameter* conv_weight_ = nullptr;
  Parameter* conv_bias_ = nullptr;
  Linear input_gate_;
  Parameter* decay_logits_ = nullptr;
  Parameter* readout_ = nullptr;
  Linear branch_;
  Linear out_;
  double dropout_p_ = 0.0;
};

/// Input projection, a stack of sequence blocks and a per-position regression head.
class BehaviorHead {
 public:
  BehaviorHead(const BehaviorHeadConfig& cfg, std::uint64_t seed);
  BehaviorHead(const BehaviorHead&) = delete;
  BehaviorHead& operator=(const BehaviorHead&) = delete;

  /// [window_len x input_dim] -> [window_len x 2]
  Var forward(const Var& window, Context& ctx) const;

  const BehaviorHeadConfig& config() const { return cfg_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const Linear& output_layer() const { return head_out_; }

 private:
  BehaviorHeadConfig cfg_;
  ParameterSet params_;
  Linear input_;
  std::vector<std::unique_ptr<SequenceBlock>> blocks_;
  LayerNormLayer final_norm_;
  Linear head_in_;
  Linear head_out_;
};

}  // namespace vaf
