#include <doctest.h>

#include "support/helpers.hpp"
#include "vafusion/errors.hpp"
#include "vafusion/heads/audio_head.hpp"
#include "vafusion/heads/behavior_head.hpp"
#include "vafusion/heads/face_head.hpp"
#include "vafusion/numerics/ops.hpp"

using namespace vaf;
using testing::random_array;
using testing::to_mat;

namespace {

FaceHeadConfig tiny_face(std::size_t len = 8) {
  FaceHeadConfig c;
  c.input_dim = 6;
  c.model_dim = 16;
  c.num_layers = 1;
  c.num_heads = 2;
  c.window_len = len;
  c.stride = len;
  c.ffn_dim = 32;
  c.head_dim = 16;
  return c;
}

BehaviorHeadConfig tiny_behavior(std::size_t layers) {
  BehaviorHeadConfig c;
  c.input_dim = 8;
  c.num_layers = layers;
  c.hidden_dim = 16;
  c.state_size = 4;
  c.kernel_size = 3;
  c.head_dim = 16;
  return c;
}

AudioHeadConfig tiny_audio() {
  AudioHeadConfig c;
  c.input_dim = 6;
  c.attention_dim = 8;
  c.hidden_dim = 8;
  return c;
}

void zero_layer(ParameterSet& p, const std::string& name) {
  p.at(name + ".weight").value.fill(0.0);
  if (auto* b = p.find(name + ".bias")) b->value.fill(0.0);
}

// One SSM block evaluated step by step from its parameters.
oracle::Mat ssm_loop(const ParameterSet& p, const std::string& n, const oracle::Mat& x) {
  const std::size_t T = x.size(), C = x[0].size();
  const auto xn = oracle::layer_norm_rows(x, testing::to_vec(p.at(n + ".norm.gamma").value),
                                          testing::to_vec(p.at(n + ".norm.beta").value));
  const auto w = to_mat(p.at(n + ".conv.weight").value);
  const auto cb = testing::to_vec(p.at(n + ".conv.bias").value);
  const std::size_t K = w.size();
  oracle::Mat u = oracle::zeros(T, C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      double s = cb[c];
      for (std::size_t j = 0; j < K; ++j) {
        if (t + j + 1 < K) continue;
        s += w[j][c] * xn[t + j + 1 - K][c];
      }
      u[t][c] = oracle::silu(s);
    }
  const auto gate_in = testing::dense_of(p, n + ".input_gate")(u);
  const auto decay = to_mat(p.at(n + ".decay_logits").value);
  const auto readout = to_mat(p.at(n + ".readout").value);
  const std::size_t N = decay[0].size();
  const auto branch = testing::dense_of(p, n + ".branch")(xn);
  oracle::Mat h = oracle::zeros(C, N), gated = oracle::zeros(T, C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      double y = 0;
      for (std::size_t s = 0; s < N; ++s) {
        h[c][s] = oracle::sigmoid(decay[c][s]) * h[c][s] + oracle::sigmoid(gate_in[t][s]) * u[t][c];
        y += readout[c][s] * h[c][s];
      }
      gated[t][c] = y * oracle::silu(branch[t][c]);
    }
  auto out = testing::dense_of(p, n + ".out")(gated);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) out[t][c] += x[t][c];
  return out;
}

}  // namespace

TEST_SUITE("heads") {

TEST_CASE("face head shape, determinism and collapse") {
  FaceHead head(tiny_face(), 3);
  NumArray x = random_array(8, 6, 4);
  Context a = Context::inference(), b = Context::inference();
  NumArray y = head.forward(Var::constant(x), a).value();
  CHECK(y.rows() == 8);
  CHECK(y.cols() == 2);
  CHECK(bit_equal(y, head.forward(Var::constant(x), b).value()));
  Context t1 = Context::training(9), t2 = Context::training(9);
  CHECK(bit_equal(head.forward(Var::constant(x), t1).value(), head.forward(Var::constant(x), t2).value()));
  CHECK_THROWS_AS(head.forward(Var::constant(random_array(7, 6, 1)), a), ShapeError);
  zero_layer(head.parameters(), "face.head.out");
  NumArray z = head.forward(Var::constant(x), a).value();
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("face head mask hides padded frames") {
  FaceHead head(tiny_face(), 5);
  NumArray x = random_array(8, 6, 6);
  NumArray x2 = x;
  for (std::size_t c = 0; c < 6; ++c) x2(7, c) += 5.0;
  Mask m(1, 8, true);
  m.set(0, 7, false);
  Context ctx = Context::inference();
  NumArray y1 = head.forward(Var::constant(x), ctx, &m).value();
  NumArray y2 = head.forward(Var::constant(x2), ctx, &m).value();
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 2; ++c) CHECK(y1(r, c) == y2(r, c));
}

TEST_CASE("ssm block matches a per-step loop") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ParameterSet p;
    Rng rng(seed);
    SsmBlock block(p, "blk", 8, 4, 3, 0.0, rng);
    for (auto& q : p)
      if (q.name.ends_with(".bias") || q.name.ends_with(".beta")) q.value = random_array(1, q.value.cols(), seed + 50);
    NumArray x = random_array(12, 8, seed + 7);
    Context ctx = Context::inference();
    NumArray y = block.forward(Var::constant(x), ctx).value();
    CHECK(testing::max_diff(to_mat(y), ssm_loop(p, "blk", to_mat(x))) < 1e-10);
  }
}

TEST_CASE("ssm block with zero input and zero biases outputs zeros") {
  ParameterSet p;
  Rng rng(2);
  SsmBlock block(p, "blk", 6, 3, 3, 0.0, rng);
  Context ctx = Context::inference();
  NumArray y = block.forward(Var::constant(NumArray::matrix(5, 6)), ctx).value();
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("behavior head is causal for every depth") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    BehaviorHead head(tiny_behavior(1 + seed % 4), seed);
    NumArray x = random_array(16, 8, seed + 1000);
    NumArray x2 = x;
    for (std::size_t c = 0; c < 8; ++c) x2(10, c) += 1.0 + c;
    Context ctx = Context::inference();
    NumArray y1 = head.forward(Var::constant(x), ctx).value();
    NumArray y2 = head.forward(Var::constant(x2), ctx).value();
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 0; c < 2; ++c) REQUIRE(y1(r, c) == y2(r, c));
    CHECK(y1(10, 0) != y2(10, 0));
  }
}

TEST_CASE("diagonal recurrence impulse response decays geometrically") {
  ParameterSet p;
  Rng rng(4);
  NumArray decay = random_array(3, 4, 8);
  NumArray u = NumArray::matrix(30, 3);
  for (std::size_t c = 0; c < 3; ++c) u(0, c) = 1.0;
  NumArray gate = NumArray::matrix(30, 4, 1.0);
  NumArray readout = NumArray::matrix(3, 4, 1.0);
  NumArray y = diag_scan(Var::constant(u), Var::constant(decay), Var::constant(gate), Var::constant(readout)).value();
  for (std::size_t t = 1; t < 30; ++t)
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(y(t, c)) <= std::abs(y(t - 1, c)));
}

TEST_CASE("behavior head shape and zero output layer") {
  BehaviorHead head(tiny_behavior(2), 1);
  NumArray x = random_array(16, 8, 2);
  Context ctx = Context::inference();
  NumArray y = head.forward(Var::constant(x), ctx).value();
  CHECK(y.rows() == 16);
  CHECK(y.cols() == 2);
  CHECK_THROWS_AS(head.forward(Var::constant(random_array(15, 8, 2)), ctx), ShapeError);
  zero_layer(head.parameters(), "behavior.head.out");
  NumArray z = head.forward(Var::constant(x), ctx).value();
  for (double v : z.values()) CHECK(v == 0.0);
  auto vis = BehaviorHeadConfig::visual_preset(256);
  CHECK(vis.num_layers == 4);
  CHECK(vis.hidden_dim == 128);
  CHECK(vis.kernel_size == 3);
  auto mm = BehaviorHeadConfig::multimodal_preset(256);
  CHECK(mm.num_layers == 12);
  CHECK(mm.hidden_dim == 256);
  CHECK(mm.kernel_size == 5);
}

TEST_CASE("attentive pooling with uniform weights gives population statistics") {
  ParameterSet p;
  Rng rng(3);
  AttentiveStatsPool pool(p, "pool", 4, 5, rng);
  p.at("pool.score.weight").value.fill(0.0);
  NumArray x = random_array(7, 4, 11);
  Context ctx = Context::inference();
  NumArray y = pool(Var::constant(x), ctx).value();
  auto m = to_mat(x);
  for (std::size_t d = 0; d < 4; ++d) {
    std::vector<double> col;
    for (auto& r : m) col.push_back(r[d]);
    const double mu = oracle::mean(col);
    double var = 0;
    for (double v : col) var += (v - mu) * (v - mu);
    var /= col.size();
    CHECK(std::abs(y(0, d) - mu) < 1e-9);
    CHECK(std::abs(y(0, 4 + d) - std::sqrt(var)) < 1e-9);
  }
}

TEST_CASE("attentive pooling degenerate weights") {
  NumArray x = NumArray::from_rows({{1, 2}, {3, -4}, {5, 6}});
  NumArray y = attention_stats(Var::constant(x), Var::constant(NumArray::row_vector({0, 1, 0}))).value();
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == -4.0);
  CHECK(y(0, 2) == doctest::Approx(std::sqrt(1e-9)));
  NumArray one = attention_stats(Var::constant(NumArray::from_rows({{2, 3}})),
                                 Var::constant(NumArray::row_vector({1.0})))
                     .value();
  CHECK(one(0, 0) == 2.0);
  CHECK(one(0, 3) < 1e-4);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    NumArray a = softmax(Var::constant(random_array(1, 6, 200 + k, 3.0))).value();
    NumArray s = attention_stats(Var::constant(random_array(6, 3, k)), Var::constant(a)).value();
    for (std::size_t d = 3; d < 6; ++d) CHECK(s(0, d) >= 0.0);
  }
}

TEST_CASE("audio head shares its head across chunks") {
  AudioHead head(tiny_audio(), 6);
  NumArray x = random_array(16, 6, 7);
  Context ctx = Context::inference();
  NumArray y = head.forward(Var::constant(x), ctx).value();
  CHECK(y.rows() == 4);
  CHECK(y.cols() == 2);
  std::vector<std::size_t> perm{2, 0, 3, 1};
  NumArray xp = NumArray::matrix(16, 6);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t d = 0; d < 6; ++d) xp(c * 4 + t, d) = x(perm[c] * 4 + t, d);
  NumArray yp = head.forward(Var::constant(xp), ctx).value();
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t d = 0; d < 2; ++d) CHECK(yp(c, d) == y(perm[c], d));
  NumArray same = NumArray::matrix(16, 6);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t d = 0; d < 6; ++d) same(r, d) = x(r % 4, d);
  NumArray ys = head.forward(Var::constant(same), ctx).value();
  for (std::size_t c = 1; c < 4; ++c)
    for (std::size_t d = 0; d < 2; ++d) CHECK(ys(c, d) == ys(0, d));
  CHECK_THROWS_AS(head.forward(Var::constant(random_array(15, 6, 1)), ctx), ShapeError);
  CHECK_THROWS_AS(head.forward(Var::constant(random_array(3, 6, 1)), ctx), ShapeError);
}

TEST_CASE("head configs reject bad sizes") {
  FaceHeadConfig f = tiny_face();
  f.num_heads = 3;
  CHECK_THROWS_AS(FaceHead(f, 0), ConfigError);
  BehaviorHeadConfig b = tiny_behavior(1);
  b.dropout_p = 1.0;
  CHECK_THROWS_AS(BehaviorHead(b, 0), ConfigError);
  AudioHeadConfig a = tiny_audio();
  a.num_chunks = 0;
  CHECK_THROWS_AS(AudioHead(a, 0), ConfigError);
}

}  // TEST_SUITE
