#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vafusion/numerics/layers.hpp"

namespace vaf {

struct RaavConfig {
  std::vector<std::string> visual_names{"face", "behavior"};
  std::vector<std::size_t> visual_dims{256, 256};
  std::size_t audio_dim = 768;
  std::size_t model_dim = 256;
  std::size_t num_latents = 8;  // n_b
  std::size_t encoder_layers = 1;
  std::size_t num_heads = 16;
  std::size_t ffn_dim = 1024;
  std::size_t head_dim = 256;
  double dropout_p = 0.1;
  /// false builds the visual-only ablation: Z0 = LN(Z_vis).
  bool use_audio = true;

  void validate() const;
};

/// One window: visual streams [L x d_m] with [1 x L] validity, and the audio
/// features of the same frames [L x d_a] with their own validity row.
struct RaavInput {
  std::vector<Var> visual;
  std::vector<Mask> visual_valid;
  Var audio;
  Mask audio_valid;
};

struct VisualGate {
  Var fused;        // [L x d_h]
  Var weights;      // [L x M]
  Mask frame_valid; // [1 x L], false where no visual modality is present
};

struct RaavOutput {
  Var predictions;     // [L x 2]
  VisualGate gate;
  Var bottleneck;      // [n_b x d_h]
  bool audio_fallback = false;  // no audio frame in the window; latents used unattended
};

/// Reliability-weighted fusion of per-frame visual tokens:
///   alpha = masked_softmax(scores + log_prior), z = sum_m alpha_m h_m.
/// `scores` and `tokens` provide one [L x 1] and one [L x d_h] entry per modality.
/// Throws NumericError on a frame with no valid modality unless `allow_empty`.
VisualGate raav_visual_gate(const std::vector<Var>& tokens, const std::vector<Var>& scores, const Var& log_prior,
                            const Mask& valid, bool allow_empty = false);

/// Visual gating, an audio bottleneck read by cross-attention, a light encoder and a regression head.
class Raav {
 public:
  Raav(const RaavConfig& cfg, std::uint64_t seed);
  Raav(const Raav&) = delete;
  Raav& operator=(const Raav&) = delete;

  Var forward(const RaavInput& input, Context& ctx) const;
  RaavOutput forward_detailed(const RaavInput& input, Context& ctx) const;

  const RaavConfig& config() const { return cfg_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  /// Output projection of the frame-to-bottleneck cross-attention; zeroing it severs the audio path.
  const Linear* audio_output_projection() const;

 private:
  RaavConfig cfg_;
  ParameterSet params_;
  std::vector<ProjectionBlock> projections_;
  std::vector<Linear> scorers_;
  Parameter* log_prior_ = nullptr;
  ProjectionBlock audio_projection_;
  Parameter* latents_ = nullptr;
  MultiHeadAttention bottleneck_read_;
  MultiHeadAttention audio_cross_;
  LayerNormLayer fuse_norm_;
  std::vector<EncoderLayer> encoder_;
  Linear head_in_;
  Linear head_out_;
};

}  // namespace vaf
