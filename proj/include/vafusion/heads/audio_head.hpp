#pragma once

#include <cstddef>
#include <cstdint>

#include "vafusion/numerics/layers.hpp"

namespace vaf {

struct AudioHeadConfig {
  std::size_t input_dim = 768;
  std::size_t num_chunks = 4;
  std::size_t attention_dim = 128;  // width of the tanh scorer
  std::size_t hidden_dim = 256;
  double head_dropout_p = 0.1;

  std::size_t pooled_dim() const { return 2 * input_dim; }
  void validate() const;
};

/// Attention-statistics pooling: s_t = w . tanh(V x_t), alpha = softmax(s),
/// returns [mu ; sigma] of the alpha-weighted frames as a [1 x 2D] row.
class AttentiveStatsPool {
 public:
  AttentiveStatsPool() = default;
  AttentiveStatsPool(ParameterSet& params, const std::string& name, std::size_t input_dim, std::size_t attention_dim,
                     Rng& rng);

  Var operator()(const Var& chunk, Context& ctx) const;
  /// The softmax weights over the chunk's frames, [1 x Tc].
  Var weights(const Var& chunk, Context& ctx) const;

 private:
  Linear project_;
  Linear score_;
};

/// Splits a padded segment into equal chunks, pools each one and applies a
/// shared regression head (layer norm -> dropout -> dense -> dense to 2).
class AudioHead {
 public:
  AudioHead(const AudioHeadConfig& cfg, std::uint64_t seed);
  AudioHead(const AudioHead&) = delete;
  AudioHead& operator=(const AudioHead&) = delete;

  /// [Ts x input_dim] -> [num_chunks x 2]
  Var forward(const Var& segment, Context& ctx) const;

  const AudioHeadConfig& config() const { return cfg_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const AttentiveStatsPool& pool() const { return pool_; }
  const Linear& output_layer() const { return out_; }

 private:
  AudioHeadConfig cfg_;
  ParameterSet params_;
  AttentiveStatsPool pool_;
  LayerNormLayer norm_;
  Linear dense_;
  Linear out_;
};

}  // namespace vaf
