#include "vafusion/heads/audio_head.hpp"

#include <string>
#include <vector>

#include "vafusion/errors.hpp"

namespace vaf {

void AudioHeadConfig::validate() const {
  if (input_dim == 0 || num_chunks == 0 || attention_dim == 0 || hidden_dim == 0) {
    throw ConfigError("audio head: all sizes must be positive");
  }
  if (head_dropout_p < 0.0 || head_dropout_p >= 1.0) throw ConfigError("audio head: dropout must be in [0,1)");
}

AttentiveStatsPool::AttentiveStatsPool(ParameterSet& params, const std::string& name, std::size_t input_dim,
                                       std::size_t attention_dim, Rng& rng)
    : project_(params, name + ".project", input_dim, attention_dim, rng),
      score_(params, name + ".score", attention_dim, 1, rng, false) {}

Var AttentiveStatsPool::weights(const Var& chunk, Context& ctx) const {
  Var scores = score_(tanh_act(project_(chunk, ctx)), ctx);  // [Tc x 1]
  return softmax(transpose(scores));
}

Var AttentiveStatsPool::operator()(const Var& chunk, Context& ctx) const {
  return attention_stats(chunk, weights(chunk, ctx));
}

AudioHead::AudioHead(const AudioHeadConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  pool_ = AttentiveStatsPool(params_, "audio.pool", cfg.input_dim, cfg.attention_dim, rng);
  norm_ = LayerNormLayer(params_, "audio.head.norm", cfg.pooled_dim());
  dense_ = Linear(params_, "audio.head.dense", cfg.pooled_dim(), cfg.hidden_dim, rng);
  out_ = Linear(params_, "audio.head.out", cfg.hidden_dim, 2, rng);
}

Var AudioHead::forward(const Var& segment, Context& ctx) const {
  const std::size_t ts = segment.rows();
  const std::size_t chunks = cfg_.num_chunks;
  if (ts < chunks) throw ShapeError("audio head: segment has fewer frames than chunks");
  if (ts % chunks != 0) throw ShapeError("audio head: segment length must be divisible by the chunk count");
  if (segment.cols() != cfg_.input_dim) throw ShapeError("audio head: feature width mismatch");
  const std::size_t tc = ts / chunks;
  std::vector<Var> pooled;
  pooled.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) pooled.push_back(pool_(slice_rows(segment, c * tc, tc), ctx));
  Var stacked = concat_rows(pooled);  // [chunks x 2D]
  Var h = dense_(dropout(norm_(stacked, ctx), cfg_.head_dropout_p, ctx), ctx);
  return out_(h, ctx);
}

}  // namespace vaf
