#include "vafusion/heads/face_head.hpp"

#include "vafusion/errors.hpp"

namespace vaf {

void FaceHeadConfig::validate() const {
  if (input_dim == 0 || model_dim == 0 || window_len == 0 || stride == 0 || ffn_dim == 0 || head_dim == 0) {
    throw ConfigError("face head: dimensions, window and stride must be positive");
  }
  AttentionConfig{num_heads, model_dim, dropout_p}.validate();
}

FaceHead::FaceHead(const FaceHeadConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  projection_ = ProjectionBlock(params_, "face.proj", cfg.input_dim, cfg.model_dim, cfg.dropout_p, rng);
  positions_ = &add_normal_parameter(params_, "face.positions", cfg.window_len, cfg.model_dim, 0.02, rng);
  const AttentionConfig attn{cfg.num_heads, cfg.model_dim, cfg.dropout_p};
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    layers_.emplace_back(params_, "face.layer" + std::to_string(i), attn, cfg.ffn_dim, rng);
  }
  head_in_ = Linear(params_, "face.head.dense", cfg.model_dim, cfg.head_dim, rng);
  head_norm_ = LayerNormLayer(params_, "face.head.norm", cfg.head_dim);
  head_out_ = Linear(params_, "face.head.out", cfg.head_dim, 2, rng);
}

Var FaceHead::forward(const Var& window, Context& ctx, const Mask* frame_mask) const {
  if (window.rows() != cfg_.window_len || window.cols() != cfg_.input_dim) {
    throw ShapeError("face head: expected a [" + std::to_string(cfg_.window_len) + " x " +
                     std::to_string(cfg_.input_dim) + "] window");
  }
  Var h = add(projection_(window, ctx), ctx.param(*positions_));
  for (const auto& layer : layers_) h = layer(h, frame_mask, ctx);
  Var r = dropout(gelu(head_norm_(head_in_(h, ctx), ctx)), cfg_.dropout_p, ctx);
  return head_out_(r, ctx);
}

}  // namespace vaf
