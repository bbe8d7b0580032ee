#include "vafusion/fusion/raav.hpp"

#include "vafusion/errors.hpp"

namespace vaf {

void RaavConfig::validate() const {
  if (visual_names.empty()) throw ConfigError("raav: the visual modality set is empty");
  if (visual_dims.size() != visual_names.size()) throw ConfigError("raav: one dimension per visual modality");
  for (std::size_t d : visual_dims)
    if (d == 0) throw ConfigError("raav: visual dimensions must be positive");
  if (audio_dim == 0) throw ConfigError("raav: audio_dim must be positive");
  if (num_latents == 0) throw ConfigError("raav: at least one bottleneck latent is required");
  if (ffn_dim == 0 || head_dim == 0) throw ConfigError("raav: ffn and head widths must be positive");
  AttentionConfig{num_heads, model_dim, dropout_p}.validate();
}

VisualGate raav_visual_gate(const std::vector<Var>& tokens, const std::vector<Var>& scores, const Var& log_prior,
                            const Mask& valid, bool allow_empty) {
  const std::size_t m_count = tokens.size();
  if (m_count == 0 || scores.size() != m_count) throw ShapeError("visual gate: one score per token stream");
  const std::size_t len = tokens.front().rows();
  if (valid.rows() != len || valid.cols() != m_count) throw ShapeError("visual gate: mask must be [L x M]");
  if (log_prior.rows() != 1 || log_prior.cols() != m_count) throw ShapeError("visual gate: prior must be [1 x M]");
  VisualGate g;
  g.frame_valid = Mask(1, len, true);
  for (std::size_t l = 0; l < len; ++l) {
    if (valid.count_row(l) == 0) {
      if (!allow_empty) throw NumericError("visual gate: frame " + std::to_string(l) + " has no valid modality");
      g.frame_valid.set(0, l, false);
    }
  }
  Var logits = add_row(concat_cols(scores), log_prior);
  g.weights = masked_softmax(logits, &valid, {.allow_empty_rows = allow_empty, .order_invariant = true});
  g.fused = mixture(tokens, g.weights);
  return g;
}

Raav::Raav(const RaavConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t m_count = cfg.visual_names.size();
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::string& name = cfg.visual_names[m];
    projections_.emplace_back(params_, "raav.proj." + name, cfg.visual_dims[m], cfg.model_dim, cfg.dropout_p, rng);
    scorers_.emplace_back(params_, "raav.score." + name, cfg.model_dim, 1, rng);
  }
  log_prior_ = &params_.add("raav.log_prior", NumArray::matrix(1, m_count));
  const AttentionConfig attn{cfg.num_heads, cfg.model_dim, cfg.dropout_p};
  // The audio path draws from its own stream so the visual parameters do not
  // depend on whether it is built.
  if (cfg.use_audio) {
    Rng audio_rng(splitmix64(seed ^ 0xa0d10a0d10ULL));
    audio_projection_ = ProjectionBlock(params_, "raav.audio.proj", cfg.audio_dim, cfg.model_dim, cfg.dropout_p,
                                        audio_rng);
    latents_ = &add_normal_parameter(params_, "raav.audio.latents", cfg.num_latents, cfg.model_dim, 1.0, audio_rng);
    bottleneck_read_ = MultiHeadAttention(params_, "raav.audio.read", attn, audio_rng);
    audio_cross_ = MultiHeadAttention(params_, "raav.audio.cross", attn, audio_rng);
  }
  fuse_norm_ = LayerNormLayer(params_, "raav.fuse_norm", cfg.model_dim);
  for (std::size_t i = 0; i < cfg.encoder_layers; ++i) {
    encoder_.emplace_back(params_, "raav.encoder" + std::to_string(i), attn, cfg.ffn_dim, rng);
  }
  head_in_ = Linear(params_, "raav.head.dense", cfg.model_dim, cfg.head_dim, rng);
  head_out_ = Linear(params_, "raav.head.out", cfg.head_dim, 2, rng);
}

const Linear* Raav::audio_output_projection() const {
  return cfg_.use_audio ? &audio_cross_.output_projection() : nullptr;
}

RaavOutput Raav::forward_detailed(const RaavInput& input, Context& ctx) const {
  const std::size_t m_count = cfg_.visual_names.size();
  if (input.visual.size() != m_count || input.visual_valid.size() != m_count) {
    throw ShapeError("raav: expected " + std::to_string(m_count) + " visual streams with masks");
  }
  const std::size_t len = input.visual.front().rows();
  Mask valid(len, m_count, false);
  std::vector<Var> tokens, scores;
  for (std::size_t m = 0; m < m_count; ++m) {
    const Var& x = input.visual[m];
    if (x.rows() != len || x.cols() != cfg_.visual_dims[m]) throw ShapeError("raav: visual stream shape mismatch");
    const Mask& vm = input.visual_valid[m];
    if (vm.rows() != 1 || vm.cols() != len) throw ShapeError("raav: visual mask must be [1 x L]");
    for (std::size_t l = 0; l < len; ++l) valid.set(l, m, vm(0, l));
    tokens.push_back(projections_[m](x, ctx));
    scores.push_back(scorers_[m](tokens.back(), ctx));
  }
  RaavOutput out;
  out.gate = raav_visual_gate(tokens, scores, ctx.param(*log_prior_), valid, true);
  Var z = out.gate.fused;

  if (cfg_.use_audio) {
    const Var& a = input.audio;
    if (!a || a.rows() != len || a.cols() != cfg_.audio_dim) throw ShapeError("raav: audio features must be [L x d_a]");
    if (input.audio_valid.rows() != 1 || input.audio_valid.cols() != len)
      throw ShapeError("raav: audio mask must be [1 x L]");
    Var latents = ctx.param(*latents_);
    if (input.audio_valid.count() == 0) {
      out.bottleneck = latents;
      out.audio_fallback = true;
    } else {
      Var projected = audio_projection_(a, ctx);
      out.bottleneck = add(latents, bottleneck_read_(latents, projected, projected, &input.audio_valid, ctx));
    }
    z = add(z, audio_cross_(z, out.bottleneck, out.bottleneck, nullptr, ctx));
  }
  z = fuse_norm_(z, ctx);

  const Mask* frame_mask = out.gate.frame_valid.count() > 0 ? &out.gate.frame_valid : nullptr;
  for (const auto& layer : encoder_) z = layer(z, frame_mask, ctx);
  Var r = dropout(gelu(head_in_(z, ctx)), cfg_.dropout_p, ctx);
  out.predictions = head_out_(r, ctx);
  return out;
}

Var Raav::forward(const RaavInput& input, Context& ctx) const { return forward_detailed(input, ctx).predictions; }

}  // namespace vaf
