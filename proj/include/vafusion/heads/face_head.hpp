#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vafusion/numerics/layers.hpp"

namespace vaf {

struct FaceHeadConfig {
  std::size_t input_dim = 256;
  std::size_t model_dim = 256;  // d_h
  std::size_t num_layers = 5;   // N
  std::size_t num_heads = 16;   // H
  std::size_t window_len = 400; // L
  std::size_t stride = 150;     // S
  std::size_t ffn_dim = 1024;
  std::size_t head_dim = 256;
  double dropout_p = 0.1;

  void validate() const;
};

/// Transformer regressor over a window of frame embeddings:
/// projection block, learned positions, N pre-norm encoder layers, regression head.
class FaceHead {
 public:
  FaceHead(const FaceHeadConfig& cfg, std::uint64_t seed);
  FaceHead(const FaceHead&) = delete;
  FaceHead& operator=(const FaceHead&) = delete;

  /// [L x input_dim] -> [L x 2]. `frame_mask` ([1 x L]) hides padded frames from attention.
  Var forward(const Var& window, Context& ctx, const Mask* frame_mask = nullptr) const;

  const FaceHeadConfig& config() const { return cfg_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const Linear& output_layer() const { return head_out_; }

 private:
  FaceHeadConfig cfg_;
  ParameterSet params_;
  ProjectionBlock projection_;
  Parameter* positions_ = nullptr;
  std::vector<EncoderLayer> layers_;
  Linear head_in_;
  LayerNormLayer head_norm_;
  Linear head_out_;
};

}  // namespace vaf
