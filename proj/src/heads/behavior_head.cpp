#include "vafusion/heads/behavior_head.hpp"

#include <cmath>

#include "vafusion/errors.hpp"

namespace vaf {

BehaviorHeadConfig BehaviorHeadConfig::visual_preset(std::size_t input_dim) {
  BehaviorHeadConfig c;
  c.input_dim = input_dim;
  c.num_layers = 4;
  c.hidden_dim = 128;
  c.state_size = 8;
  c.kernel_size = 3;
  c.head_dim = 512;
  return c;
}

BehaviorHeadConfig BehaviorHeadConfig::multimodal_preset(std::size_t input_dim) {
  BehaviorHeadConfig c;
  c.input_dim = input_dim;
  c.num_layers = 12;
  c.hidden_dim = 256;
  c.state_size = 8;
  c.kernel_size = 5;
  c.head_dim = 512;
  return c;
}

void BehaviorHeadConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || state_size == 0 || kernel_size == 0 || head_dim == 0 || window_len == 0 ||
      stride == 0) {
    throw ConfigError("behavior head: all sizes must be positive");
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("behavior head: dropout_p must be in [0,1)");
}

SsmBlock::SsmBlock(ParameterSet& params, const std::string& name, std::size_t hidden, std::size_t state_size,
                   std::size_t kernel_size, double dropout_p, Rng& rng)
    : norm_(params, name + ".norm", hidden), dropout_p_(dropout_p) {
  const double conv_limit = 1.0 / std::sqrt(static_cast<double>(kernel_size));
  NumArray conv = NumArray::matrix(kernel_size, hidden);
  for (double& v : conv.values()) v = rng.uniform(-conv_limit, conv_limit);
  conv_weight_ = &params.add(name + ".conv.weight", std::move(conv));
  conv_bias_ = &params.add(name + ".conv.bias", NumArray::matrix(1, hidden));
  input_gate_ = Linear(params, name + ".input_gate", hidden, state_size, rng);
  // Decays start spread over [0.6, 0.95] so states cover several time scales.
  NumArray logits = NumArray::matrix(hidden, state_size);
  for (double& v : logits.values()) {
    const double a = rng.uniform(0.6, 0.95);
    v = std::log(a / (1.0 - a));
  }
  decay_logits_ = &params.add(name + ".decay_logits", std::move(logits));
  NumArray readout = NumArray::matrix(hidden, state_size);
  const double r = 1.0 / std::sqrt(static_cast<double>(state_size));
  for (double& v : readout.values()) v = rng.uniform(-r, r);
  readout_ = &params.add(name + ".readout", std::move(readout));
  branch_ = Linear(params, name + ".branch", hidden, hidden, rng);
  out_ = Linear(params, name + ".out", hidden, hidden, rng);
}

Var SsmBlock::forward(const Var& x, Context& ctx) const {
  Var xn = norm_(x, ctx);
  Var u = silu(causal_conv1d(xn, ctx.param(*conv_weight_), ctx.param(*conv_bias_)));
  Var b = sigmoid(input_gate_(u, ctx));
  Var y = diag_scan(u, ctx.param(*decay_logits_), b, ctx.param(*readout_));
  Var gated = mul(y, silu(branch_(xn, ctx)));
  return add(x, dropout(out_(gated, ctx), dropout_p_, ctx));
}

BehaviorHead::BehaviorHead(const BehaviorHeadConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  input_ = Linear(params_, "behavior.input", cfg.input_dim, cfg.hidden_dim, rng);
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    blocks_.push_back(std::make_unique<SsmBlock>(params_, "behavior.block" + std::to_string(i), cfg.hidden_dim,
                                                 cfg.state_size, cfg.kernel_size, cfg.dropout_p, rng));
  }
  final_norm_ = LayerNormLayer(params_, "behavior.norm", cfg.hidden_dim);
  head_in_ = Linear(params_, "behavior.head.dense", cfg.hidden_dim, cfg.head_dim, rng);
  head_out_ = Linear(params_, "behavior.head.out", cfg.head_dim, 2, rng);
}

Var BehaviorHead::forward(const Var& window, Context& ctx) const {
  if (window.rows() != cfg_.window_len || window.cols() != cfg_.input_dim) {
    throw ShapeError("behavior head: expected a [" + std::to_string(cfg_.window_len) + " x " +
                     std::to_string(cfg_.input_dim) + "] window");
  }
  Var h = dropout(input_(window, ctx), cfg_.dropout_p, ctx);
  for (const auto& block : blocks_) h = block->forward(h, ctx);
  Var r = dropout(gelu(head_in_(final_norm_(h, ctx), ctx)), cfg_.dropout_p, ctx);
  return head_out_(r, ctx);
}

}  // namespace vaf
