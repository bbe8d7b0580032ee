#include <doctest.h>

#include <set>

#include "support/helpers.hpp"
#include "vafusion/errors.hpp"
#include "vafusion/fusion/dcmmoe.hpp"
#include "vafusion/fusion/raav.hpp"
#include "vafusion/metrics/ccc.hpp"
#include "vafusion/numerics/layers.hpp"
#include "vafusion/numerics/ops.hpp"

using namespace vaf;
using testing::random_array;

namespace {

DcmmoeConfig tiny_dcmmoe(std::vector<std::string> names, std::vector<std::size_t> dims) {
  DcmmoeConfig c;
  c.modality_names = std::move(names);
  c.modality_dims = std::move(dims);
  c.model_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_dim = 12;
  return c;
}

ModalityBundle random_bundle(const DcmmoeConfig& c, std::size_t len, std::uint64_t seed, double drop = 0.0) {
  ModalityBundle b;
  Rng rng(seed);
  b.names = c.modality_names;
  for (std::size_t m = 0; m < c.num_modalities(); ++m) {
    b.features.push_back(Var::constant(random_array(len, c.modality_dims[m], rng.next())));
    Mask v(1, len, true);
    for (std::size_t l = 0; l < len; ++l) v.set(0, l, !rng.bernoulli(drop));
    b.valid.push_back(v);
  }
  return b;
}

void copy_by_name(const ParameterSet& from, ParameterSet& to) {
  for (auto& p : to) p.value = from.at(p.name).value;
}

RaavConfig tiny_raav(bool use_audio = true) {
  RaavConfig c;
  c.visual_dims = {5, 4};
  c.audio_dim = 6;
  c.model_dim = 8;
  c.num_latents = 2;
  c.num_heads = 2;
  c.ffn_dim = 12;
  c.head_dim = 8;
  c.use_audio = use_audio;
  return c;
}

RaavInput random_raav_input(const RaavConfig& c, std::size_t len, std::uint64_t seed) {
  RaavInput in;
  for (std::size_t m = 0; m < c.visual_dims.size(); ++m) {
    in.visual.push_back(Var::constant(random_array(len, c.visual_dims[m], seed + m)));
    in.visual_valid.emplace_back(1, len, true);
  }
  in.audio = Var::constant(random_array(len, c.audio_dim, seed + 99));
  in.audio_valid = Mask(1, len, true);
  return in;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("expert registry has one expert per ordered modality pair") {
  const std::vector<std::string> all{"face", "behavior", "audio", "text"};
  for (std::size_t m : {2u, 3u, 4u}) {
    std::vector<std::string> names(all.begin(), all.begin() + m);
    Dcmmoe model(tiny_dcmmoe(names, std::vector<std::size_t>(m, 3)), 1);
    CHECK(model.experts().size() == m * (m - 1));
    std::set<std::pair<std::size_t, std::size_t>> ids;
    for (const auto& e : model.experts()) {
      CHECK(e.query != e.context);
      ids.insert({e.query, e.context});
    }
    CHECK(ids.size() == m * (m - 1));
    std::set<std::string> pnames;
    for (const auto& p : model.parameters()) pnames.insert(p.name);
    CHECK(pnames.size() == model.parameters().size());
  }
  CHECK(Dcmmoe(tiny_dcmmoe({"face", "audio", "behavior"}, {3, 3, 3}), 0).expert_name(0) == "face->audio");
  CHECK_THROWS_AS(Dcmmoe(tiny_dcmmoe({"face"}, {3}), 0), ConfigError);
  CHECK_THROWS_AS(Dcmmoe(tiny_dcmmoe({"face", "face"}, {3, 3}), 0), ConfigError);
}

TEST_CASE("gate rows are probability vectors") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t m = 2 + rng.below(3);
    std::vector<std::string> names;
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < m; ++i) {
      names.push_back("m" + std::to_string(i));
      dims.push_back(1 + rng.below(5));
    }
    auto cfg = tiny_dcmmoe(names, dims);
    Dcmmoe model(cfg, seed);
    Context ctx = Context::inference();
    auto out = model.forward_detailed(random_bundle(cfg, 3 + rng.below(6), seed + 1, 0.3), ctx);
    const NumArray& g = out.gate.value();
    for (std::size_t l = 0; l < g.rows(); ++l) {
      double s = 0;
      for (std::size_t e = 0; e < g.cols(); ++e) {
        REQUIRE(g(l, e) >= 0.0);
        s += g(l, e);
      }
      REQUIRE(std::abs(s - 1.0) < 1e-9);
    }
    CHECK(out.predictions.rows() == g.rows());
    CHECK(out.predictions.cols() == 2);
  }
}

TEST_CASE("equal gate logits give the plain mean of the experts") {
  auto cfg = tiny_dcmmoe({"face", "behavior", "audio"}, {3, 4, 5});
  Dcmmoe model(cfg, 4);
  for (auto& p : model.parameters())
    if (p.name.find(".gate.") != std::string::npos) p.value.fill(0.0);
  Context ctx = Context::inference();
  auto out = model.forward_detailed(random_bundle(cfg, 6, 8), ctx);
  const NumArray& g = out.gate.value();
  for (double v : g.values()) CHECK(v == doctest::Approx(1.0 / 6).epsilon(1e-14));
  NumArray mean = NumArray::matrix(6, 8);
  for (const auto& e : out.experts)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e.value()[i] / 6.0;
  CHECK(max_abs_diff(mean, out.fused.value()) < 1e-14);
}

TEST_CASE("gate excludes experts whose query frame or context window is unobserved") {
  auto cfg = tiny_dcmmoe({"face", "behavior", "audio"}, {3, 4, 5});
  Dcmmoe model(cfg, 2);
  auto bundle = random_bundle(cfg, 5, 3);
  bundle.valid[0].set(0, 1, false);
  for (std::size_t l = 0; l < 5; ++l) bundle.valid[2].set(0, l, false);
  Context ctx = Context::inference();
  auto out = model.forward_detailed(bundle, ctx);
  const NumArray& g = out.gate.value();
  for (std::size_t e = 0; e < model.experts().size(); ++e) {
    const auto& id = model.experts()[e];
    for (std::size_t l = 0; l < 5; ++l) {
      const bool allowed = !(id.query == 0 && l == 1) && id.query != 2 && id.context != 2;
      if (!allowed) CHECK(g(l, e) == 0.0);
    }
  }
}

TEST_CASE("relabeling modalities leaves the fused output bit-identical") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = tiny_dcmmoe({"face", "behavior", "audio"}, {3, 4, 5});
    Dcmmoe a(cfg, seed);
    auto bundle = random_bundle(cfg, 6, seed + 10, 0.2);
    const std::vector<std::size_t> perm{2, 0, 1};
    DcmmoeConfig pc = cfg;
    ModalityBundle pb;
    for (std::size_t i = 0; i < 3; ++i) {
      pc.modality_names[i] = cfg.modality_names[perm[i]];
      pc.modality_dims[i] = cfg.modality_dims[perm[i]];
      pb.names.push_back(bundle.names[perm[i]]);
      pb.features.push_back(bundle.features[perm[i]]);
      pb.valid.push_back(bundle.valid[perm[i]]);
    }
    Dcmmoe b(pc, seed + 1000);
    copy_by_name(a.parameters(), b.parameters());
    Context ca = Context::inference(), cb = Context::inference();
    auto oa = a.forward_detailed(bundle, ca);
    auto ob = b.forward_detailed(pb, cb);
    CHECK(bit_equal(oa.fused.value(), ob.fused.value()));
    CHECK(bit_equal(oa.predictions.value(), ob.predictions.value()));
    for (std::size_t e = 0; e < a.experts().size(); ++e) {
      const std::string name = a.expert_name(e);
      for (std::size_t f = 0; f < b.experts().size(); ++f)
        if (b.expert_name(f) == name)
          for (std::size_t l = 0; l < 6; ++l) CHECK(oa.gate.value()(l, e) == ob.gate.value()(l, f));
    }
  }
}

TEST_CASE("dcmmoe eval forward is deterministic and checks its bundle") {
  auto cfg = tiny_dcmmoe({"face", "audio"}, {3, 4});
  Dcmmoe model(cfg, 1);
  auto bundle = random_bundle(cfg, 4, 2);
  Context c1 = Context::inference(), c2 = Context::inference();
  CHECK(bit_equal(model.forward(bundle, c1).value(), model.forward(bundle, c2).value()));
  std::swap(bundle.names[0], bundle.names[1]);
  CHECK_THROWS_AS(model.forward(bundle, c1), ShapeError);
}

TEST_CASE("visual gate examples") {
  Var t0 = Var::constant(random_array(3, 4, 1)), t1 = Var::constant(random_array(3, 4, 2));
  Var s0 = Var::constant(random_array(3, 1, 3)), s1 = Var::constant(random_array(3, 1, 4));
  Var prior = Var::constant(NumArray::matrix(1, 2));
  Mask only_first(3, 2, true);
  for (std::size_t l = 0; l < 3; ++l) only_first.set(l, 1, false);
  auto g = raav_visual_gate({t0, t1}, {s0, s1}, prior, only_first);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(g.weights.value()(l, 0) == 1.0);
    CHECK(g.weights.value()(l, 1) == 0.0);
  }
  CHECK(bit_equal(g.fused.value(), t0.value()));
  auto same = raav_visual_gate({t0, t0}, {s0, s0}, prior, Mask(3, 2, true));
  for (std::size_t l = 0; l < 3; ++l) CHECK(same.weights.value()(l, 0) == 0.5);
  Mask empty(3, 2, true);
  empty.set(1, 0, false);
  empty.set(1, 1, false);
  CHECK_THROWS_AS(raav_visual_gate({t0, t1}, {s0, s1}, prior, empty), NumericError);
  auto allowed = raav_visual_gate({t0, t1}, {s0, s1}, prior, empty, true);
  CHECK_FALSE(allowed.frame_valid(0, 1));
}

TEST_CASE("raav gives exactly zero weight and gradient to an invalid modality") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = tiny_raav();
    Raav model(cfg, seed);
    auto in = random_raav_input(cfg, 6, seed * 7);
    in.visual[1] = Var::input(in.visual[1].value());
    in.visual_valid[1].set(0, 2, false);
    in.visual_valid[1].set(0, 4, false);
    Context ctx = Context::eval_with_grad();
    auto out = model.forward_detailed(in, ctx);
    CHECK(out.gate.weights.value()(2, 1) == 0.0);
    CHECK(out.gate.weights.value()(4, 1) == 0.0);
    CHECK(out.gate.weights.value()(2, 0) == 1.0);
    NumArray t = random_array(6, 2, seed, 0.4);
    backward(hybrid_loss(t, out.predictions, Mask(6, 2, true), LossConfig{}).loss);
    const NumArray& g = in.visual[1].grad();
    for (std::size_t c = 0; c < g.cols(); ++c) {
      CHECK(g(2, c) == 0.0);
      CHECK(g(4, c) == 0.0);
    }
    double other = 0.0;
    for (std::size_t c = 0; c < g.cols(); ++c) other += std::abs(g(0, c));
    CHECK(other > 0.0);
  }
}

TEST_CASE("zeroing the audio output projection reproduces the visual-only model") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Raav full(tiny_raav(true), seed);
    Raav visual(tiny_raav(false), seed + 77);
    copy_by_name(full.parameters(), visual.parameters());
    auto& proj = full.parameters();
    proj.at("raav.audio.cross.out.weight").value.fill(0.0);
    proj.at("raav.audio.cross.out.bias").value.fill(0.0);
    REQUIRE(full.audio_output_projection() != nullptr);
    CHECK(visual.audio_output_projection() == nullptr);
    auto in = random_raav_input(full.config(), 7, seed);
    in.visual_valid[0].set(0, 3, false);
    Context a = Context::inference(), b = Context::inference();
    CHECK(bit_equal(full.forward(in, a).value(), visual.forward(in, b).value()));
  }
}

TEST_CASE("visual parameters do not depend on whether the audio path exists") {
  Raav full(tiny_raav(true), 5), visual(tiny_raav(false), 5);
  for (const auto& p : visual.parameters()) CHECK(bit_equal(p.value, full.parameters().at(p.name).value));
}

TEST_CASE("a single latent with constant audio gives every frame the same context") {
  ParameterSet p;
  Rng rng(3);
  MultiHeadAttention mha(p, "cross", AttentionConfig{2, 8, 0.0}, rng);
  NumArray q = random_array(5, 8, 1), kv = random_array(1, 8, 2);
  Context ctx = Context::inference();
  NumArray y = mha(Var::constant(q), Var::constant(kv), Var::constant(kv), nullptr, ctx).value();
  for (std::size_t l = 1; l < 5; ++l)
    for (std::size_t c = 0; c < 8; ++c) CHECK(y(l, c) == doctest::Approx(y(0, c)).epsilon(1e-14));
  NumArray rep = NumArray::matrix(4, 8);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 8; ++c) rep(r, c) = kv(0, c);
  NumArray y4 = mha(Var::constant(q), Var::constant(rep), Var::constant(rep), nullptr, ctx).value();
  CHECK(max_abs_diff(y, y4) < 1e-14);
}

TEST_CASE("raav falls back to the raw latents without audio and stays deterministic") {
  Raav model(tiny_raav(), 2);
  auto in = random_raav_input(model.config(), 5, 4);
  for (std::size_t l = 0; l < 5; ++l) in.audio_valid.set(0, l, false);
  Context a = Context::inference(), b = Context::inference();
  auto out = model.forward_detailed(in, a);
  CHECK(out.audio_fallback);
  CHECK(bit_equal(out.bottleneck.value(), model.parameters().at("raav.audio.latents").value));
  CHECK(bit_equal(out.predictions.value(), model.forward(in, b).value()));
  for (std::size_t l = 0; l < 5; ++l) {
    in.visual_valid[0].set(0, l, false);
    in.visual_valid[1].set(0, l, false);
  }
  CHECK(model.forward(in, a).value().all_finite());
}

}  // TEST_SUITE
