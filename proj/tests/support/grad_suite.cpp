#include "grad_suite.hpp"

#include <functional>
#include <memory>

#include "helpers.hpp"
#include "vafusion/fusion/dcmmoe.hpp"
#include "vafusion/fusion/raav.hpp"
#include "vafusion/heads/audio_head.hpp"
#include "vafusion/heads/behavior_head.hpp"
#include "vafusion/heads/face_head.hpp"
#include "vafusion/metrics/ccc.hpp"
#include "vafusion/numerics/layers.hpp"
#include "vafusion/numerics/ops.hpp"

namespace testing {

using namespace vaf;

namespace {

// Projects an output onto fixed random weights so every output entry matters.
Var probe(const Var& out, std::uint64_t seed) {
  return sum_all(mul(out, Var::constant(random_array(out.rows(), out.cols(), seed))));
}

std::vector<Parameter*> all_of(ParameterSet& p) {
  std::vector<Parameter*> out;
  for (auto& q : p) out.push_back(&q);
  return out;
}

struct Suite {
  std::uint64_t seed;
  GradCheckOptions opts;
  std::vector<GradOutcome> out;

  void run(const std::string& name, ParameterSet& params, const LossFn& loss, bool model = false) {
    out.push_back({name, model, grad_check(loss, all_of(params), seed, opts)});
  }

  void run_train(const std::string& name, ParameterSet& params, const LossFn& loss, bool model = false) {
    GradCheckOptions o = opts;
    o.train_seed = splitmix64(seed ^ 0xd0d0);
    out.push_back({name, model, grad_check(loss, all_of(params), seed, o)});
  }
};

}  // namespace

std::vector<GradOutcome> run_grad_suite(std::uint64_t seed, std::size_t coords) {
  Suite s{seed, {}, {}};
  s.opts.max_coords_per_tensor = coords;
  std::uint64_t k = seed * 1000;
  auto next = [&] { return ++k; };

  // Elementwise and structural ops on raw tensors.
  {
    ParameterSet p;
    Parameter& a = p.add("a", random_array(3, 4, next()));
    Parameter& b = p.add("b", random_array(4, 5, next()));
    const auto r = next();
    s.run("matmul", p, [&, r](Context& c) { return probe(matmul(c.param(a), c.param(b)), r); });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(3, 4, next()));
    Parameter& w = p.add("w", random_array(4, 2, next()));
    Parameter& b = p.add("b", random_array(1, 2, next()));
    const auto r = next();
    s.run("linear", p, [&, r](Context& c) { return probe(linear(c.param(x), c.param(w), c.param(b)), r); });
  }
  {
    ParameterSet p;
    Parameter& a = p.add("a", random_array(3, 4, next()));
    Parameter& b = p.add("b", random_array(3, 4, next()));
    Parameter& row = p.add("row", random_array(1, 4, next()));
    const auto r = next();
    s.run("add_sub_mul_scale_add_row", p, [&, r](Context& c) {
      Var x = add(c.param(a), c.param(b));
      Var y = mul(sub(x, scale(c.param(b), 0.7)), c.param(a));
      return probe(add_row(y, c.param(row)), r);
    });
  }
  for (auto [name, fn] : std::vector<std::pair<std::string, Var (*)(const Var&)>>{
           {"gelu", &gelu}, {"tanh", &tanh_act}, {"sigmoid", &sigmoid}, {"silu", &silu}}) {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(3, 5, next(), 1.5));
    const auto r = next();
    auto f = fn;
    s.run(name, p, [&, r, f](Context& c) { return probe(f(c.param(x)), r); });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(4, 6, next(), 2.0));
    Parameter& g = p.add("gamma", random_array(1, 6, next()));
    Parameter& b = p.add("beta", random_array(1, 6, next()));
    const auto r = next();
    s.run("layer_norm", p, [&, r](Context& c) { return probe(layer_norm(c.param(x), c.param(g), c.param(b)), r); });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(4, 5, next()));
    Mask m(4, 5, true);
    m.set(0, 1, false);
    m.set(2, 0, false);
    m.set(2, 4, false);
    const auto r = next();
    s.run("masked_softmax", p, [&, r, m](Context& c) { return probe(masked_softmax(c.param(x), &m), r); });
    s.run("masked_softmax_order_invariant", p, [&, r, m](Context& c) {
      return probe(masked_softmax(c.param(x), &m, {.order_invariant = true}), r);
    });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(4, 6, next()));
    const auto r = next();
    s.run_train("dropout", p, [&, r](Context& c) { return probe(dropout(c.param(x), 0.3, c), r); });
  }
  {
    ParameterSet p;
    Parameter& q = p.add("q", random_array(3, 4, next()));
    Parameter& kk = p.add("k", random_array(5, 4, next()));
    Parameter& v = p.add("v", random_array(5, 4, next()));
    Mask km(1, 5, true);
    km.set(0, 3, false);
    const auto r = next();
    s.run("attention", p, [&, r, km](Context& c) {
      return probe(attention(c.param(q), c.param(kk), c.param(v), 2, &km), r);
    });
  }
  {
    ParameterSet p;
    Parameter& a = p.add("a", random_array(3, 2, next()));
    Parameter& b = p.add("b", random_array(3, 3, next()));
    Parameter& d = p.add("d", random_array(2, 5, next()));
    const auto r = next();
    s.run("concat_slice_transpose", p, [&, r](Context& c) {
      Var x = concat_cols({c.param(a), c.param(b)});
      Var y = concat_rows({x, c.param(d)});
      Var z = slice_cols(slice_rows(y, 1, 3), 1, 3);
      return add(probe(transpose(z), r), mean_all(mul(y, y)));
    });
  }
  {
    ParameterSet p;
    std::vector<Parameter*> parts;
    for (int i = 0; i < 3; ++i) parts.push_back(&p.add("part" + std::to_string(i), random_array(4, 3, next())));
    Parameter& w = p.add("w", random_array(4, 3, next()));
    const auto r = next();
    s.run("mean_of_mixture", p, [&, r, parts](Context& c) {
      std::vector<Var> vs;
      for (auto* q : parts) vs.push_back(c.param(*q));
      Var g = softmax(c.param(w));
      return add(probe(mixture(vs, g), r), probe(mean_of(vs), r + 1));
    });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(6, 3, next()));
    Parameter& w = p.add("w", random_array(3, 3, next()));
    Parameter& b = p.add("b", random_array(1, 3, next()));
    const auto r = next();
    s.run("causal_conv1d", p, [&, r](Context& c) {
      return probe(causal_conv1d(c.param(x), c.param(w), c.param(b)), r);
    });
  }
  {
    ParameterSet p;
    Parameter& u = p.add("u", random_array(5, 3, next()));
    Parameter& d = p.add("decay", random_array(3, 2, next()));
    Parameter& g = p.add("gate", random_array(5, 2, next()));
    Parameter& ro = p.add("readout", random_array(3, 2, next()));
    const auto r = next();
    s.run("diag_scan", p, [&, r](Context& c) {
      return probe(diag_scan(c.param(u), c.param(d), c.param(g), c.param(ro)), r);
    });
  }
  {
    ParameterSet p;
    Parameter& x = p.add("x", random_array(5, 3, next()));
    Parameter& a = p.add("alpha_logits", random_array(1, 5, next()));
    const auto r = next();
    s.run("attention_stats", p, [&, r](Context& c) {
      return probe(attention_stats(c.param(x), softmax(c.param(a))), r);
    });
  }
  {
    ParameterSet p;
    Parameter& pred = p.add("pred", random_array(7, 2, next(), 0.5));
    // Targets sit at least 0.2 away from every prediction so no probe crosses the |.| kink.
    NumArray t = pred.value;
    Rng side(next());
    for (double& v : t.values()) v += side.bernoulli(0.5) ? 0.2 + 0.3 * side.uniform() : -0.2 - 0.3 * side.uniform();
    Mask valid(7, 2, true);
    valid.set(2, 0, false);
    valid.set(5, 1, false);
    LossConfig lc;
    lc.lambda_ccc = 0.6;
    lc.weight_valence = 0.3;
    lc.weight_arousal = 0.7;
    s.run("ccc_column", p, [&, t, valid](Context& c) { return ccc_column(t, c.param(pred), valid, 1); });
    s.run("mae_column", p, [&, t, valid](Context& c) { return mae_column(t, c.param(pred), valid, 0); });
    s.run("hybrid_loss", p, [&, t, valid, lc](Context& c) { return hybrid_loss(t, c.param(pred), valid, lc).loss; });
  }

  // Layers, with their own parameters plus the input under test.
  {
    ParameterSet p;
    Rng rng(next());
    Linear lin(p, "lin", 4, 3, rng);
    LayerNormLayer ln(p, "ln", 3);
    ProjectionBlock pb(p, "proj", 3, 4, 0.2, rng);
    Parameter& x = p.add("x", random_array(3, 4, next()));
    const auto r = next();
    s.run_train("linear_norm_projection", p, [&, r](Context& c) {
      return probe(pb(ln(lin(c.param(x), c), c), c), r);
    });
  }
  {
    ParameterSet p;
    Rng rng(next());
    AttentionConfig ac{2, 4, 0.1};
    MultiHeadAttention mha(p, "mha", ac, rng);
    FeedForward ff(p, "ffn", 4, 6, 0.1, rng);
    Parameter& q = p.add("q", random_array(3, 4, next()));
    Parameter& kv = p.add("kv", random_array(5, 4, next()));
    Mask km(1, 5, true);
    km.set(0, 0, false);
    const auto r = next();
    s.run("multi_head_attention_ffn", p, [&, r, km](Context& c) {
      Var kvv = c.param(kv);
      return probe(ff(mha(c.param(q), kvv, kvv, &km, c), c), r);
    });
  }
  {
    ParameterSet p;
    Rng rng(next());
    AttentionConfig ac{2, 4, 0.1};
    EncoderLayer enc(p, "enc", ac, 8, rng);
    CrossAttentionLayer cross(p, "cross", ac, 8, rng);
    Parameter& x = p.add("x", random_array(4, 4, next()));
    Parameter& ctxp = p.add("context", random_array(3, 4, next()));
    Mask m(1, 4, true);
    m.set(0, 2, false);
    const auto r = next();
    s.run_train("encoder_cross_attention", p, [&, r, m](Context& c) {
      Var h = enc(c.param(x), &m, c);
      return probe(cross(h, c.param(ctxp), nullptr, c), r);
    });
  }
  {
    ParameterSet p;
    Rng rng(next());
    SsmBlock block(p, "ssm", 4, 3, 3, 0.1, rng);
    Parameter& x = p.add("x", random_array(6, 4, next()));
    const auto r = next();
    s.run("ssm_block", p, [&, r](Context& c) { return probe(block.forward(c.param(x), c), r); });
  }
  {
    ParameterSet p;
    Rng rng(next());
    AttentiveStatsPool pool(p, "pool", 3, 4, rng);
    Parameter& x = p.add("x", random_array(6, 3, next()));
    const auto r = next();
    s.run("attentive_stats_pool", p, [&, r](Context& c) { return probe(pool(c.param(x), c), r); });
  }
  {
    ParameterSet p;
    std::vector<Parameter*> tok, sc;
    for (int m = 0; m < 3; ++m) {
      tok.push_back(&p.add("tok" + std::to_string(m), random_array(4, 3, next())));
      sc.push_back(&p.add("score" + std::to_string(m), random_array(4, 1, next())));
    }
    Parameter& prior = p.add("prior", random_array(1, 3, next()));
    Mask valid(4, 3, true);
    valid.set(0, 1, false);
    valid.set(3, 0, false);
    valid.set(3, 2, false);
    const auto r = next();
    s.run("visual_gate", p, [&, r, tok, sc, valid](Context& c) {
      std::vector<Var> t, z;
      for (auto* q : tok) t.push_back(c.param(*q));
      for (auto* q : sc) z.push_back(c.param(*q));
      return probe(raav_visual_gate(t, z, c.param(prior), valid).fused, r);
    });
  }

  // Full models under the hybrid loss.
  const bool train_mode = seed % 2 == 1;
  auto run_model = [&](const std::string& name, ParameterSet& p, const LossFn& fn) {
    if (train_mode)
      s.run_train(name, p, fn, true);
    else
      s.run(name, p, fn, true);
  };
  LossConfig lc;
  lc.weight_valence = 0.4;
  lc.weight_arousal = 0.6;
  {
    FaceHeadConfig fc;
    fc.input_dim = 3;
    fc.model_dim = 4;
    fc.num_layers = 1;
    fc.num_heads = 2;
    fc.window_len = 5;
    fc.ffn_dim = 6;
    fc.head_dim = 4;
    auto model = std::make_shared<FaceHead>(fc, next());
    NumArray x = random_array(5, 3, next());
    NumArray t = random_array(5, 2, next(), 0.4);
    Mask fm(1, 5, true);
    fm.set(0, 4, false);
    Mask valid(5, 2, true);
    run_model("face_head", model->parameters(), [model, x, t, fm, valid, lc](Context& c) {
      return hybrid_loss(t, model->forward(Var::constant(x), c, &fm), valid, lc).loss;
    });
  }
  {
    BehaviorHeadConfig bc;
    bc.input_dim = 3;
    bc.num_layers = 2;
    bc.hidden_dim = 4;
    bc.state_size = 2;
    bc.kernel_size = 2;
    bc.head_dim = 4;
    bc.window_len = 5;
    auto model = std::make_shared<BehaviorHead>(bc, next());
    NumArray x = random_array(5, 3, next());
    NumArray t = random_array(5, 2, next(), 0.4);
    Mask valid(5, 2, true);
    run_model("behavior_head", model->parameters(), [model, x, t, valid, lc](Context& c) {
      return hybrid_loss(t, model->forward(Var::constant(x), c), valid, lc).loss;
    });
  }
  {
    AudioHeadConfig ac;
    ac.input_dim = 3;
    ac.num_chunks = 3;
    ac.attention_dim = 4;
    ac.hidden_dim = 4;
    auto model = std::make_shared<AudioHead>(ac, next());
    NumArray x = random_array(9, 3, next());
    NumArray t = random_array(3, 2, next(), 0.4);
    Mask valid(3, 2, true);
    run_model("audio_head", model->parameters(), [model, x, t, valid, lc](Context& c) {
      return hybrid_loss(t, model->forward(Var::constant(x), c), valid, lc).loss;
    });
  }
  {
    DcmmoeConfig dc;
    dc.modality_names = {"face", "behavior", "audio"};
    dc.modality_dims = {3, 2, 4};
    dc.model_dim = 4;
    dc.num_layers = 1;
    dc.num_heads = 2;
    dc.ffn_dim = 6;
    auto model = std::make_shared<Dcmmoe>(dc, next());
    ModalityBundle bundle;
    bundle.names = dc.modality_names;
    for (std::size_t m = 0; m < 3; ++m) {
      bundle.features.push_back(Var::constant(random_array(5, dc.modality_dims[m], next())));
      bundle.valid.emplace_back(1, 5, true);
    }
    bundle.valid[1].set(0, 2, false);
    bundle.valid[2].set(0, 0, false);
    NumArray t = random_array(5, 2, next(), 0.4);
    Mask valid(5, 2, true);
    run_model("dcmmoe", model->parameters(), [model, bundle, t, valid, lc](Context& c) {
      return hybrid_loss(t, model->forward(bundle, c), valid, lc).loss;
    });
  }
  {
    RaavConfig rc;
    rc.visual_dims = {3, 2};
    rc.audio_dim = 4;
    rc.model_dim = 4;
    rc.num_latents = 2;
    rc.num_heads = 2;
    rc.ffn_dim = 6;
    rc.head_dim = 4;
    auto model = std::make_shared<Raav>(rc, next());
    RaavInput in;
    in.visual = {Var::constant(random_array(5, 3, next())), Var::constant(random_array(5, 2, next()))};
    in.visual_valid = {Mask(1, 5, true), Mask(1, 5, true)};
    in.visual_valid[0].set(0, 1, false);
    in.audio = Var::constant(random_array(5, 4, next()));
    in.audio_valid = Mask(1, 5, true);
    in.audio_valid.set(0, 3, false);
    NumArray t = random_array(5, 2, next(), 0.4);
    Mask valid(5, 2, true);
    run_model("raav", model->parameters(), [model, in, t, valid, lc](Context& c) {
      return hybrid_loss(t, model->forward(in, c), valid, lc).loss;
    });
  }
  return s.out;
}

}  // namespace testing
