#pragma once

#include <cstddef>
#include <string>

#include "vafusion/numerics/autograd.hpp"
#include "vafusion/numerics/ops.hpp"
#include "vafusion/numerics/rng.hpp"

namespace vaf {

struct AttentionConfig {
  std::size_t num_heads = 16;
  std::size_t model_dim = 256;
  double dropout_p = 0.0;

  /// Throws ConfigError unless model_dim is a positive multiple of num_heads.
  void validate() const;
  std::size_t head_dim() const { return model_dim / num_heads; }
};

/// Dense layer, weight stored [in x out], Xavier-uniform initialized.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);

  Var operator()(const Var& x, Context& ctx) const;
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(ParameterSet& params, const std::string& name, std::size_t dim, double eps = 1e-5);
  Var operator()(const Var& x, Context& ctx) const;

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
  double eps_ = 1e-5;
};

/// Dense -> layer norm -> dropout.
class ProjectionBlock {
 public:
  ProjectionBlock() = default;
  ProjectionBlock(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, double dropout_p,
                  Rng& rng);
  Var operator()(const Var& x, Context& ctx) const;
  const Linear& dense() const { return dense_; }

 private:
  Linear dense_;
  LayerNormLayer norm_;
  double dropout_p_ = 0.0;
};

/// Query/key/value projections, per-head scaled dot-product attention, output projection.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& params, const std::string& name, const AttentionConfig& cfg, Rng& rng);

  Var operator()(const Var& query, const Var& key, const Var& value, const Mask* key_mask, Context& ctx) const;
  const AttentionConfig& config() const { return cfg_; }
  const Linear& output_projection() const { return out_; }

 private:
  AttentionConfig cfg_;
  Linear q_, k_, v_, out_;
};

/// Dense -> GELU -> dropout -> dense.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t hidden, double dropout_p,
              Rng& rng);
  Var operator()(const Var& x, Context& ctx) const;

 private:
  Linear up_, down_;
  double dropout_p_ = 0.0;
};

/// Pre-norm self-attention encoder layer.
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(ParameterSet& params, const std::string& name, const AttentionConfig& cfg, std::size_t ffn_dim,
               Rng& rng);
  Var operator()(const Var& x, const Mask* key_mask, Context& ctx) const;

 private:
  LayerNormLayer norm_attn_, norm_ffn_;
  MultiHeadAttention attn_;
  FeedForward ffn_;
  double dropout_p_ = 0.0;
};

/// Pre-norm cross-attention layer: the query stream attends to a fixed context stream.
class CrossAttentionLayer {
 public:
  CrossAttentionLayer() = default;
  CrossAttentionLayer(ParameterSet& params, const std::string& name, const AttentionConfig& cfg,
                      std::size_t ffn_dim, Rng& rng);
  Var operator()(const Var& query, const Var& context, const Mask* context_mask, Context& ctx) const;

 private:
  LayerNormLayer norm_query_, norm_context_, norm_ffn_;
  MultiHeadAttention attn_;
  FeedForward ffn_;
  double dropout_p_ = 0.0;
};

/// Matrix parameter with entries N(0, stddev^2).
Parameter& add_normal_parameter(ParameterSet& params, const std::string& name, std::size_t rows, std::size_t cols,
                                double stddev, Rng& rng);

}  // namespace vaf
