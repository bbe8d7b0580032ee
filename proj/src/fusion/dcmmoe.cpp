#include "vafusion/fusion/dcmmoe.hpp"

#include <set>

#include "vafusion/errors.hpp"

namespace vaf {

void ModalityBundle::validate() const {
  if (features.empty()) throw ShapeError("modality bundle is empty");
  if (names.size() != features.size() || valid.size() != features.size()) {
    throw ShapeError("modality bundle: names, features and masks must have equal counts");
  }
  const std::size_t len = length();
  for (std::size_t m = 0; m < features.size(); ++m) {
    if (features[m].rows() != len) throw ShapeError("modality bundle: streams differ in length");
    if (valid[m].rows() != 1 || valid[m].cols() != len) throw ShapeError("modality bundle: mask must be [1 x L]");
  }
}

void DcmmoeConfig::validate() const {
  if (modality_names.size() < 2) throw ConfigError("dcmmoe needs at least two modalities");
  if (modality_dims.size() != modality_names.size()) throw ConfigError("dcmmoe: one dimension per modality");
  std::set<std::string> unique(modality_names.begin(), modality_names.end());
  if (unique.size() != modality_names.size()) throw ConfigError("dcmmoe: modality names must be unique");
  for (std::size_t d : modality_dims)
    if (d == 0) throw ConfigError("dcmmoe: modality dimensions must be positive");
  if (num_layers == 0 || ffn_dim == 0) throw ConfigError("dcmmoe: depth and ffn width must be positive");
  AttentionConfig{num_heads, model_dim, dropout_p}.validate();
}

Dcmmoe::Dcmmoe(const DcmmoeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t m_count = cfg.num_modalities();
  for (std::size_t m = 0; m < m_count; ++m) {
    projections_.emplace_back(params_, "dcmmoe.proj." + cfg.modality_names[m], cfg.modality_dims[m],
                              cfg.model_dim, cfg.dropout_p, rng);
  }
  const AttentionConfig attn{cfg.num_heads, cfg.model_dim, cfg.dropout_p};
  for (std::size_t q = 0; q < m_count; ++q) {
    for (std::size_t k = 0; k < m_count; ++k) {
      if (q == k) continue;
      expert_ids_.push_back({q, k});
      const std::string name = "dcmmoe.expert." + cfg.modality_names[q] + "->" + cfg.modality_names[k];
      Expert ex;
      for (std::size_t i = 0; i < cfg.num_layers; ++i) {
        ex.layers.emplace_back(params_, name + ".layer" + std::to_string(i), attn, cfg.ffn_dim, rng);
      }
      ex.norm = LayerNormLayer(params_, name + ".norm", cfg.model_dim);
      ex.gate = Linear(params_, name + ".gate", cfg.model_dim, 1, rng);
      experts_.push_back(std::move(ex));
    }
  }
  head_ = Linear(params_, "dcmmoe.head", cfg.model_dim, 2, rng);
}

std::string Dcmmoe::expert_name(std::size_t e) const {
  const ExpertId& id = expert_ids_.at(e);
  return cfg_.modality_names[id.query] + "->" + cfg_.modality_names[id.context];
}

Var Dcmmoe::project(std::size_t modality, const Var& x, Context& ctx) const {
  if (x.cols() != cfg_.modality_dims.at(modality)) {
    throw ShapeError("dcmmoe: modality '" + cfg_.modality_names[modality] + "' width mismatch");
  }
  return projections_[modality](x, ctx);
}

DcmmoeOutput Dcmmoe::forward_detailed(const ModalityBundle& bundle, Context& ctx) const {
  bundle.validate();
  const std::size_t m_count = cfg_.num_modalities();
  if (bundle.size() != m_count) throw ShapeError("dcmmoe: bundle has the wrong number of modalities");
  for (std::size_t m = 0; m < m_count; ++m) {
    if (bundle.names[m] != cfg_.modality_names[m]) {
      throw ShapeError("dcmmoe: bundle modality '" + bundle.names[m] + "' where '" + cfg_.modality_names[m] +
                       "' was expected");
    }
  }
  const std::size_t len = bundle.length();

  std::vector<Var> projected;
  projected.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) projected.push_back(project(m, bundle.features[m], ctx));

  std::vector<bool> has_keys(m_count);
  for (std::size_t m = 0; m < m_count; ++m) has_keys[m] = bundle.valid[m].count() > 0;

  DcmmoeOutput out;
  const Var mean_state = mean_of(projected);
  std::vector<Var> logits;
  Mask gate_mask(len, experts_.size(), true);
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    const ExpertId& id = expert_ids_[e];
    const Expert& ex = experts_[e];
    // A context stream with no observed frame in the window is attended unmasked
    // (its aligned fill) but the expert is removed from the gate.
    const Mask* key_mask = has_keys[id.context] ? &bundle.valid[id.context] : nullptr;
    Var z = projected[id.query];
    for (const auto& layer : ex.layers) z = layer(z, projected[id.context], key_mask, ctx);
    out.experts.push_back(ex.norm(z, ctx));
    logits.push_back(ex.gate(mean_state, ctx));
    for (std::size_t l = 0; l < len; ++l) {
      gate_mask.set(l, e, has_keys[id.context] && bundle.valid[id.query](0, l));
    }
  }
  // Frames where no expert qualifies fall back to the plain gate.
  for (std::size_t l = 0; l < len; ++l) {
    if (gate_mask.count_row(l) > 0) continue;
    for (std::size_t e = 0; e < experts_.size(); ++e) gate_mask.set(l, e, true);
  }
  out.gate = masked_softmax(concat_cols(logits), &gate_mask, {.allow_empty_rows = false, .order_invariant = true});
  out.fused = mixture(out.experts, out.gate);
  out.predictions = head_(out.fused, ctx);
  return out;
}

Var Dcmmoe::forward(const ModalityBundle& bundle, Context& ctx) const {
  return forward_detailed(bundle, ctx).predictions;
}

}  // namespace vaf
