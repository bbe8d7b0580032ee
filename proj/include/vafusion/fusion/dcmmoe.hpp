#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vafusion/numerics/layers.hpp"

namespace vaf {

/// Frame-aligned inputs for one window: one [L x d_m] stream per modality and
/// its per-frame validity as a [1 x L] mask.
struct ModalityBundle {
  std::vector<std::string> names;
  std::vector<Var> features;
  std::vector<Mask> valid;

  std::size_t size() const { return features.size(); }
  std::size_t length() const { return features.empty() ? 0 : features.front().rows(); }
  /// Throws ShapeError unless every stream has the same length and a matching mask.
  void validate() const;
};

struct DcmmoeConfig {
  std::vector<std::string> modality_names;
  std::vector<std::size_t> modality_dims;
  std::size_t model_dim = 256;  // d_h
  std::size_t num_layers = 5;   // N, cross-attention depth per expert
  std::size_t num_heads = 16;   // H
  std::size_t ffn_dim = 1024;
  double dropout_p = 0.1;

  std::size_t num_modalities() const { return modality_names.size(); }
  void validate() const;
};

struct ExpertId {
  std::size_t query = 0;
  std::size_t context = 0;
};

struct DcmmoeOutput {
  Var predictions;          // [L x 2]
  Var gate;                 // [L x |E|], rows are probability vectors
  std::vector<Var> experts; // one [L x d_h] stream per expert
  Var fused;                // [L x d_h]
};

/// Directed cross-modal mixture of experts. Every ordered modality pair (q, k),
/// q != k, owns a cross-attention stack in which q's projected stream attends to
/// k's. A per-frame softmax gate computed from the mean projected state mixes
/// the expert streams before a linear regression head.
class Dcmmoe {
 public:
  Dcmmoe(const DcmmoeConfig& cfg, std::uint64_t seed);
  Dcmmoe(const Dcmmoe&) = delete;
  Dcmmoe& operator=(const Dcmmoe&) = delete;

  Var forward(const ModalityBundle& bundle, Context& ctx) const;
  DcmmoeOutput forward_detailed(const ModalityBundle& bundle, Context& ctx) const;
  /// Projected stream H^(m) for one modality.
  Var project(std::size_t modality, const Var& x, Context& ctx) const;

  const DcmmoeConfig& config() const { return cfg_; }
  const std::vector<ExpertId>& experts() const { return expert_ids_; }
  std::string expert_name(std::size_t e) const;
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

 private:
  struct Expert {
    std::vector<CrossAttentionLayer> layers;
    LayerNormLayer norm;
    Linear gate;  // d_h -> 1, this expert's column of the gating map
  };

  DcmmoeConfig cfg_;
  ParameterSet params_;
  std::vector<ProjectionBlock> projections_;
  std::vector<ExpertId> expert_ids_;
  std::vector<Expert> experts_;
  Linear head_;
};

}  // namespace vaf
