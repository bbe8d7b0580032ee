#include "vafusion/numerics/layers.hpp"

#include <cmath>

#include "vafusion/errors.hpp"

namespace vaf {

void AttentionConfig::validate() const {
  if (num_heads == 0 || model_dim == 0 || model_dim % num_heads != 0) {
    throw ConfigError("attention: model_dim " + std::to_string(model_dim) + " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("attention: dropout_p must be in [0,1)");
}

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool with_bias)
    : in_(in), out_(out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  NumArray w = NumArray::matrix(in, out);
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  weight_ = &params.add(name + ".weight", std::move(w));
  if (with_bias) bias_ = &params.add(name + ".bias", NumArray::matrix(1, out));
}

Var Linear::operator()(const Var& x, Context& ctx) const {
  return linear(x, ctx.param(*weight_), bias_ ? ctx.param(*bias_) : Var());
}

LayerNormLayer::LayerNormLayer(ParameterSet& params, const std::string& name, std::size_t dim, double eps)
    : eps_(eps) {
  gamma_ = &params.add(name + ".gamma", NumArray::matrix(1, dim, 1.0));
  beta_ = &params.add(name + ".beta", NumArray::matrix(1, dim, 0.0));
}

Var LayerNormLayer::operator()(const Var& x, Context& ctx) const {
  return layer_norm(x, ctx.param(*gamma_), ctx.param(*beta_), eps_);
}

ProjectionBlock::ProjectionBlock(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                                 double dropout_p, Rng& rng)
    : dense_(params, name + ".dense", in, out, rng), norm_(params, name + ".norm", out), dropout_p_(dropout_p) {}

Var ProjectionBlock::operator()(const Var& x, Context& ctx) const {
  return dropout(norm_(dense_(x, ctx), ctx), dropout_p_, ctx);
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& params, const std::string& name, const AttentionConfig& cfg,
                                       Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg.model_dim;
  q_ = Linear(params, name + ".query", d, d, rng);
  k_ = Linear(params, name + ".key", d, d, rng);
  v_ = Linear(params, name + ".value", d, d, rng);
  out_ = Linear(params, name + ".out", d, d, rng);
}

Var MultiHeadAttention::operator()(const Var& query, const Var& key, const Var& value, const Mask* key_mask,
                                   Context& ctx) const {
  Var heads = attention(q_(query, ctx), k_(key, ctx), v_(value, ctx), cfg_.num_heads, key_mask);
  return out_(heads, ctx);
}

FeedForward::FeedForward(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t hidden,
                         double dropout_p, Rng& rng)
    : up_(params, name + ".up", dim, hidden, rng), down_(params, name + ".down", hidden, dim, rng),
      dropout_p_(dropout_p) {}

Var FeedForward::operator()(const Var& x, Context& ctx) const {
  return down_(dropout(gelu(up_(x, ctx)), dropout_p_, ctx), ctx);
}

EncoderLayer::EncoderLayer(ParameterSet& params, const std::string& name, const AttentionConfig& cfg,
                           std::size_t ffn_dim, Rng& rng)
    : norm_attn_(params, name + ".norm_attn", cfg.model_dim),
      norm_ffn_(params, name + ".norm_ffn", cfg.model_dim),
      attn_(params, name + ".attn", cfg, rng),
      ffn_(params, name + ".ffn", cfg.model_dim, ffn_dim, cfg.dropout_p, rng),
      dropout_p_(cfg.dropout_p) {}

Var EncoderLayer::operator()(const Var& x, const Mask* key_mask, Context& ctx) const {
  Var n = norm_attn_(x, ctx);
  Var h = add(x, dropout(attn_(n, n, n, key_mask, ctx), dropout_p_, ctx));
  return add(h, dropout(ffn_(norm_ffn_(h, ctx), ctx), dropout_p_, ctx));
}

CrossAttentionLayer::CrossAttentionLayer(ParameterSet& params, const std::string& name, const AttentionConfig& cfg,
                                         std::size_t ffn_dim, Rng& rng)
    : norm_query_(params, name + ".norm_query", cfg.model_dim),
      norm_context_(params, name + ".norm_context", cfg.model_dim),
      norm_ffn_(params, name + ".norm_ffn", cfg.model_dim),
      attn_(params, name + ".attn", cfg, rng),
      ffn_(params, name + ".ffn", cfg.model_dim, ffn_dim, cfg.dropout_p, rng),
      dropout_p_(cfg.dropout_p) {}

Var CrossAttentionLayer::operator()(const Var& query, const Var& context, const Mask* context_mask,
                                    Context& ctx) const {
  Var c = norm_context_(context, ctx);
  Var h = add(query, dropout(attn_(norm_query_(query, ctx), c, c, context_mask, ctx), dropout_p_, ctx));
  return add(h, dropout(ffn_(norm_ffn_(h, ctx), ctx), dropout_p_, ctx));
}

Parameter& add_normal_parameter(ParameterSet& params, const std::string& name, std::size_t rows, std::size_t cols,
                                double stddev, Rng& rng) {
  NumArray v = NumArray::matrix(rows, cols);
  for (double& x : v.values()) x = stddev * rng.normal();
  return params.add(name, std::move(v));
}

}  // namespace vaf
