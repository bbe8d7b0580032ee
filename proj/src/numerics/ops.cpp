#include "vafusion/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vafusion/errors.hpp"
#include "vafusion/numerics/kernels.hpp"
#include "vafusion/numerics/rng.hpp"

namespace vaf {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}
inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require(bool cond, const char* what) {
  if (!cond) throw ShapeError(what);
}

NumArray like(const NumArray& a, double fill = 0.0) { return NumArray(a.shape(), fill); }

void accumulate(Node* n, const NumArray& g) {
  if (!n->requires_grad) return;
  NumArray& dst = n->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

template <typename Fwd, typename Bwd>
Var unary_elementwise(const Var& x, Fwd fwd, Bwd dydx) {
  const NumArray& xv = x.value();
  NumArray out = like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  Node* px = x.node();
  return make_result(std::move(out), {x}, [px, dydx](Node& self) {
    const NumArray& xv = px->val();
    NumArray& gx = px->grad_buffer();
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * dydx(xv[i], self.value[i]);
  });
}

}  // namespace

double order_invariant_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Value-level
// ---------------------------------------------------------------------------

NumArray masked_softmax(const NumArray& logits, const Mask& mask) {
  require(mask.rows() == logits.rows() && mask.cols() == logits.cols(), "masked_softmax: mask shape mismatch");
  NumArray out = like(logits);
  const std::size_t empty = kernels::masked_softmax_rows(logits.rows(), logits.cols(), logits.data(), mask.data(),
                                                         out.data());
  if (empty != logits.rows()) {
    throw NumericError("masked_softmax: row " + std::to_string(empty) + " has no valid entries");
  }
  return out;
}

NumArray gelu(const NumArray& x) {
  NumArray out = like(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu_scalar(x[i]);
  return out;
}

NumArray layer_norm(const NumArray& x, const NumArray& gamma, const NumArray& beta, double eps) {
  return layer_norm(Var::constant(x), Var::constant(gamma), Var::constant(beta), eps).value();
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const NumArray& av = a.value();
  const NumArray& bv = b.value();
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  NumArray out = NumArray::matrix(m, n);
  kernels::gemm_nn(m, n, k, av.data(), bv.data(), out.data(), false);
  Node* pa = a.node();
  Node* pb = b.node();
  return make_result(std::move(out), {a, b}, [pa, pb, m, n, k](Node& self) {
    if (pa->requires_grad) kernels::gemm_nt(m, k, n, self.grad.data(), pb->val().data(), pa->grad_buffer().data());
    if (pb->requires_grad) kernels::gemm_tn(k, n, m, pa->val().data(), self.grad.data(), pb->grad_buffer().data());
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const NumArray& xv = x.value();
  const NumArray& wv = weight.value();
  require(xv.cols() == wv.rows(), "linear: input width does not match weight rows");
  const std::size_t rows = xv.rows(), in = wv.rows(), out_dim = wv.cols();
  NumArray out = NumArray::matrix(rows, out_dim);
  if (bias) {
    require(bias.value().size() == out_dim, "linear: bias width mismatch");
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(bias.value().data(), out_dim, out.data() + r * out_dim);
    kernels::gemm_nn(rows, out_dim, in, xv.data(), wv.data(), out.data(), true);
  } else {
    kernels::gemm_nn(rows, out_dim, in, xv.data(), wv.data(), out.data(), false);
  }
  Node* px = x.node();
  Node* pw = weight.node();
  Node* pb = bias ? bias.node() : nullptr;
  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [px, pw, pb, rows, in, out_dim](Node& self) {
    const double* g = self.grad.data();
    if (px->requires_grad) kernels::gemm_nt(rows, in, out_dim, g, pw->val().data(), px->grad_buffer().data());
    if (pw->requires_grad) kernels::gemm_tn(in, out_dim, rows, px->val().data(), g, pw->grad_buffer().data());
    if (pb && pb->requires_grad) {
      NumArray& gb = pb->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out_dim; ++c) gb[c] += g[r * out_dim + c];
    }
  });
}

Var add(const Var& a, const Var& b) {
  const NumArray& av = a.value();
  const NumArray& bv = b.value();
  require(av.size() == bv.size() && av.cols() == bv.cols(), "add: shape mismatch");
  NumArray out = like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Node* pa = a.node();
  Node* pb = b.node();
  return make_result(std::move(out), {a, b}, [pa, pb](Node& self) {
    accumulate(pa, self.grad);
    accumulate(pb, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  const NumArray& av = a.value();
  const NumArray& bv = b.value();
  require(av.size() == bv.size() && av.cols() == bv.cols(), "sub: shape mismatch");
  NumArray out = like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  Node* pa = a.node();
  Node* pb = b.node();
  return make_result(std::move(out), {a, b}, [pa, pb](Node& self) {
    accumulate(pa, self.grad);
    if (pb->requires_grad) {
      NumArray& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  const NumArray& av = a.value();
  const NumArray& bv = b.value();
  require(av.size() == bv.size() && av.cols() == bv.cols(), "mul: shape mismatch");
  NumArray out = like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Node* pa = a.node();
  Node* pb = b.node();
  return make_result(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      NumArray& ga = pa->grad_buffer();
      const NumArray& bv = pb->val();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * bv[i];
    }
    if (pb->requires_grad) {
      NumArray& gb = pb->grad_buffer();
      const NumArray& av = pa->val();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  const NumArray& av = a.value();
  NumArray out = like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  Node* pa = a.node();
  return make_result(std::move(out), {a}, [pa, s](Node& self) {
    NumArray& ga = pa->grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * s;
  });
}

Var add_row(const Var& a, const Var& row) {
  const NumArray& av = a.value();
  const NumArray& rv = row.value();
  const std::size_t rows = av.rows(), cols = av.cols();
  require(rv.size() == cols, "add_row: row width mismatch");
  NumArray out = like(av);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] + rv[c];
  Node* pa = a.node();
  Node* pr = row.node();
  return make_result(std::move(out), {a, row}, [pa, pr, rows, cols](Node& self) {
    accumulate(pa, self.grad);
    if (pr->requires_grad) {
      NumArray& gr = pr->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gr[c] += self.grad[r * cols + c];
    }
  });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

Var gelu(const Var& x) {
  return unary_elementwise(x, gelu_scalar, [](double xi, double) { return gelu_grad(xi); });
}

Var tanh_act(const Var& x) {
  return unary_elementwise(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& x) {
  return unary_elementwise(x, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var silu(const Var& x) {
  return unary_elementwise(
      x, [](double v) { return v * sigmoid_scalar(v); },
      [](double v, double) {
        const double s = sigmoid_scalar(v);
        return s + v * s * (1.0 - s);
      });
}

// ---------------------------------------------------------------------------
// Normalization and softmax
// ---------------------------------------------------------------------------

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const NumArray& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  require(gamma.value().size() == cols && beta.value().size() == cols, "layer_norm: affine width mismatch");
  NumArray out = like(xv);
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(rows);
  kernels::layer_norm_rows(rows, cols, xv.data(), gamma.value().data(), beta.value().data(), eps, xhat.data(),
                           inv_std.data(), out.data());
  Node* px = x.node();
  Node* pg = gamma.node();
  Node* pb = beta.node();
  return make_result(std::move(out), {x, gamma, beta},
                     [px, pg, pb, rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const double* g = self.grad.data();
                       const double* gam = pg->val().data();
                       if (pg->requires_grad || pb->requires_grad) {
                         NumArray* gg = pg->requires_grad ? &pg->grad_buffer() : nullptr;
                         NumArray* gb = pb->requires_grad ? &pb->grad_buffer() : nullptr;
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) {
                             if (gg) (*gg)[c] += g[r * cols + c] * xhat[r * cols + c];
                             if (gb) (*gb)[c] += g[r * cols + c];
                           }
                         }
                       }
                       if (!px->requires_grad) return;
                       NumArray& gx = px->grad_buffer();
                       const double n = static_cast<double>(cols);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           const double d = g[r * cols + c] * gam[c];
                           mean_d += d;
                           mean_dx += d * xhat[r * cols + c];
                         }
                         mean_d /= n;
                         mean_dx /= n;
                         for (std::size_t c = 0; c < cols; ++c) {
                           const double d = g[r * cols + c] * gam[c];
                           gx[r * cols + c] += inv_std[r] * (d - mean_d - xhat[r * cols + c] * mean_dx);
                         }
                       }
                     });
}

Var masked_softmax(const Var& logits, const Mask* mask, SoftmaxOptions opts) {
  const NumArray& xv = logits.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (mask) require(mask->rows() == rows && mask->cols() == cols, "masked_softmax: mask shape mismatch");
  NumArray out = like(xv);
  std::size_t empty = rows;
  if (!opts.order_invariant) {
    empty = kernels::masked_softmax_rows(rows, cols, xv.data(), mask ? mask->data() : nullptr, out.data());
  } else {
    std::vector<double> terms;
    for (std::size_t r = 0; r < rows; ++r) {
      double mx = -INFINITY;
      bool any = false;
      for (std::size_t c = 0; c < cols; ++c) {
        if (!mask || (*mask)(r, c)) {
          mx = std::max(mx, xv(r, c));
          any = true;
        }
      }
      if (!any) {
        if (empty == rows) empty = r;
        continue;
      }
      terms.clear();
      for (std::size_t c = 0; c < cols; ++c) {
        if (!mask || (*mask)(r, c)) {
          out(r, c) = std::exp(xv(r, c) - mx);
          terms.push_back(out(r, c));
        }
      }
      const double sum = order_invariant_sum(terms);
      for (std::size_t c = 0; c < cols; ++c) out(r, c) /= sum;
    }
  }
  if (empty != rows && !opts.allow_empty_rows) {
    throw NumericError("masked_softmax: row " + std::to_string(empty) + " has no valid entries");
  }
  Node* px = logits.node();
  return make_result(std::move(out), {logits}, [px, rows, cols](Node& self) {
    NumArray& gx = px->grad_buffer();
    const NumArray& y = self.value;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += self.grad[r * cols + c] * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += y[r * cols + c] * (self.grad[r * cols + c] - dot);
    }
  });
}

Var dropout(const Var& x, double p, Context& ctx) {
  if (!ctx.training() || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const NumArray& xv = x.value();
  const std::uint64_t stream = splitmix64(ctx.seed() ^ splitmix64(ctx.next_stream() + 0x5bd1e995ULL));
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(xv.size());
  NumArray out = like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    factor[i] = unit_from_bits(splitmix64(stream + i)) >= p ? keep_scale : 0.0;
    out[i] = xv[i] * factor[i];
  }
  Node* px = x.node();
  return make_result(std::move(out), {x}, [px, factor = std::move(factor)](Node& self) {
    NumArray& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * factor[i];
  });
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

namespace {

void gather_head(const NumArray& src, std::size_t head, std::size_t dh, std::vector<double>& dst) {
  const std::size_t rows = src.rows(), cols = src.cols();
  dst.resize(rows * dh);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(src.data() + r * cols + head * dh, dh, dst.data() + r * dh);
}

void scatter_add_head(const std::vector<double>& src, std::size_t head, std::size_t dh, NumArray& dst) {
  const std::size_t rows = dst.rows(), cols = dst.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < dh; ++c) dst[r * cols + head * dh + c] += src[r * dh + c];
}

}  // namespace

Var attention(const Var& q, const Var& k, const Var& v, std::size_t heads, const Mask* key_mask) {
  const NumArray& qv = q.value();
  const NumArray& kv = k.value();
  const NumArray& vv = v.value();
  const std::size_t lq = qv.rows(), lk = kv.rows(), d = qv.cols();
  require(heads > 0 && d % heads == 0, "attention: model width not divisible by heads");
  require(kv.cols() == d && vv.cols() == d && vv.rows() == lk, "attention: key/value shape mismatch");
  require(lk > 0, "attention: empty key set");
  std::vector<std::uint8_t> mask;
  if (key_mask) {
    require(key_mask->size() == lk, "attention: key mask length mismatch");
    if (key_mask->count() == 0) throw NumericError("attention: every key is masked");
    mask.resize(lq * lk);
    for (std::size_t i = 0; i < lq; ++i)
      for (std::size_t j = 0; j < lk; ++j) mask[i * lk + j] = (*key_mask)[j] ? 1 : 0;
  }
  const std::size_t dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  NumArray out = NumArray::matrix(lq, d);
  std::vector<double> probs(heads * lq * lk);
  std::vector<double> qh, kh, vh, scores(lq * lk), oh(lq * dh);
  for (std::size_t h = 0; h < heads; ++h) {
    gather_head(qv, h, dh, qh);
    gather_head(kv, h, dh, kh);
    gather_head(vv, h, dh, vh);
    std::fill(scores.begin(), scores.end(), 0.0);
    kernels::gemm_nt(lq, lk, dh, qh.data(), kh.data(), scores.data());
    for (double& s : scores) s *= scale_factor;
    double* p = probs.data() + h * lq * lk;
    kernels::masked_softmax_rows(lq, lk, scores.data(), mask.empty() ? nullptr : mask.data(), p);
    kernels::gemm_nn(lq, dh, lk, p, vh.data(), oh.data(), false);
    for (std::size_t r = 0; r < lq; ++r) std::copy_n(oh.data() + r * dh, dh, out.data() + r * d + h * dh);
  }
  Node* pq = q.node();
  Node* pk = k.node();
  Node* pv = v.node();
  return make_result(
      std::move(out), {q, k, v}, [pq, pk, pv, heads, lq, lk, dh, scale_factor, probs = std::move(probs)](Node& self) {
        std::vector<double> qh, kh, vh, goh, gp(lq * lk), gq(lq * dh), gk(lk * dh), gv(lk * dh);
        for (std::size_t h = 0; h < heads; ++h) {
          gather_head(pq->val(), h, dh, qh);
          gather_head(pk->val(), h, dh, kh);
          gather_head(pv->val(), h, dh, vh);
          gather_head(self.grad, h, dh, goh);
          const double* p = probs.data() + h * lq * lk;
          std::fill(gp.begin(), gp.end(), 0.0);
          kernels::gemm_nt(lq, lk, dh, goh.data(), vh.data(), gp.data());
          if (pv->requires_grad) {
            std::fill(gv.begin(), gv.end(), 0.0);
            kernels::gemm_tn(lk, dh, lq, p, goh.data(), gv.data());
            scatter_add_head(gv, h, dh, pv->grad_buffer());
          }
          // dS = P * (dP - rowdot(dP, P)), folded with the score scale.
          for (std::size_t i = 0; i < lq; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < lk; ++j) dot += gp[i * lk + j] * p[i * lk + j];
            for (std::size_t j = 0; j < lk; ++j) gp[i * lk + j] = p[i * lk + j] * (gp[i * lk + j] - dot) * scale_factor;
          }
          if (pq->requires_grad) {
            kernels::gemm_nn(lq, dh, lk, gp.data(), kh.data(), gq.data(), false);
            scatter_add_head(gq, h, dh, pq->grad_buffer());
          }
          if (pk->requires_grad) {
            std::fill(gk.begin(), gk.end(), 0.0);
            kernels::gemm_tn(lk, dh, lq, gp.data(), qh.data(), gk.data());
            scatter_add_head(gk, h, dh, pk->grad_buffer());
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const std::size_t rows = parts.front().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row count mismatch");
    offsets.push_back(total);
    total += p.cols();
  }
  NumArray out = NumArray::matrix(rows, total);
  std::vector<Node*> nodes;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const NumArray& pv = parts[i].value();
    const std::size_t c = pv.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.data() + r * c, c, out.data() + r * total + offsets[i]);
    nodes.push_back(parts[i].node());
  }
  return make_result(std::move(out), parts, [nodes, offsets, rows, total](Node& self) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->requires_grad) continue;
      NumArray& g = nodes[i]->grad_buffer();
      const std::size_t c = g.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * total + offsets[i] + j];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no parts");
  const std::size_t cols = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column count mismatch");
    total += p.rows();
  }
  NumArray out = NumArray::matrix(total, cols);
  std::vector<Node*> nodes;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
    offset += p.value().size();
    nodes.push_back(p.node());
  }
  return make_result(std::move(out), parts, [nodes](Node& self) {
    std::size_t offset = 0;
    for (Node* n : nodes) {
      const std::size_t sz = n->val().size();
      if (n->requires_grad) {
        NumArray& g = n->grad_buffer();
        for (std::size_t i = 0; i < sz; ++i) g[i] += self.grad[offset + i];
      }
      offset += sz;
    }
  });
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t count) {
  const NumArray& xv = x.value();
  require(begin + count <= xv.rows(), "slice_rows: out of range");
  const std::size_t cols = xv.cols();
  NumArray out = NumArray::matrix(count, cols);
  std::copy_n(xv.data() + begin * cols, count * cols, out.data());
  Node* px = x.node();
  return make_result(std::move(out), {x}, [px, begin, count, cols](Node& self) {
    NumArray& g = px->grad_buffer();
    for (std::size_t i = 0; i < count * cols; ++i) g[begin * cols + i] += self.grad[i];
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  const NumArray& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  require(begin + count <= cols, "slice_cols: out of range");
  NumArray out = NumArray::matrix(rows, count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * cols + begin, count, out.data() + r * count);
  Node* px = x.node();
  return make_result(std::move(out), {x}, [px, begin, count, rows, cols](Node& self) {
    NumArray& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) g[r * cols + begin + c] += self.grad[r * count + c];
  });
}

Var transpose(const Var& x) {
  const NumArray& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  NumArray out = NumArray::matrix(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = xv[r * cols + c];
  Node* px = x.node();
  return make_result(std::move(out), {x}, [px, rows, cols](Node& self) {
    NumArray& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[c * rows + r];
  });
}

Var sum_all(const Var& x) {
  const NumArray& xv = x.value();
  double s = 0.0;
  for (double v : xv.values()) s += v;
  Node* px = x.node();
  return make_result(NumArray::scalar(s), {x}, [px](Node& self) {
    NumArray& g = px->grad_buffer();
    const double gs = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gs;
  });
}

Var mean_all(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  require(n > 0, "mean_all: empty input");
  return scale(sum_all(x), 1.0 / n);
}

Var mean_of(const std::vector<Var>& parts) {
  require(!parts.empty(), "mean_of: no parts");
  const NumArray& first = parts.front().value();
  for (const auto& p : parts) require(p.value().same_shape(first), "mean_of: shape mismatch");
  const std::size_t m = parts.size();
  const double inv = 1.0 / static_cast<double>(m);
  NumArray out = like(first);
  std::vector<double> terms(m);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t e = 0; e < m; ++e) terms[e] = parts[e].value()[i];
    out[i] = order_invariant_sum(terms) * inv;
  }
  std::vector<Node*> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_result(std::move(out), parts, [nodes, inv](Node& self) {
    for (Node* n : nodes) {
      if (!n->requires_grad) continue;
      NumArray& g = n->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * inv;
    }
  });
}

Var mixture(const std::vector<Var>& parts, const Var& weights) {
  require(!parts.empty(), "mixture: no parts");
  const NumArray& wv = weights.value();
  const std::size_t e_count = parts.size();
  const std::size_t rows = parts.front().rows(), cols = parts.front().cols();
  require(wv.rows() == rows && wv.cols() == e_count, "mixture: weights must be [rows x parts]");
  for (const auto& p : parts) require(p.rows() == rows && p.cols() == cols, "mixture: part shape mismatch");
  NumArray out = NumArray::matrix(rows, cols);
  std::vector<double> terms(e_count);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t e = 0; e < e_count; ++e) terms[e] = wv(r, e) * parts[e].value()(r, c);
      out(r, c) = order_invariant_sum(terms);
    }
  }
  std::vector<Node*> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  Node* pw = weights.node();
  std::vector<Var> inputs = parts;
  inputs.push_back(weights);
  return make_result(std::move(out), std::move(inputs), [nodes, pw, rows, cols, e_count](Node& self) {
    const NumArray& wv = pw->val();
    for (std::size_t e = 0; e < e_count; ++e) {
      Node* n = nodes[e];
      if (n->requires_grad) {
        NumArray& g = n->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) g(r, c) += wv(r, e) * self.grad(r, c);
      }
      if (pw->requires_grad) {
        NumArray& gw = pw->grad_buffer();
        const NumArray& pv = n->val();
        for (std::size_t r = 0; r < rows; ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < cols; ++c) s += self.grad(r, c) * pv(r, c);
          gw(r, e) += s;
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Sequence ops
// ---------------------------------------------------------------------------

Var causal_conv1d(const Var& x, const Var& weight, const Var& bias) {
  const NumArray& xv = x.value();
  const NumArray& wv = weight.value();
  const std::size_t t_len = xv.rows(), ch = xv.cols(), k = wv.rows();
  require(wv.cols() == ch && bias.value().size() == ch, "causal_conv1d: channel mismatch");
  NumArray out = NumArray::matrix(t_len, ch);
  const NumArray& bv = bias.value();
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < ch; ++c) out(t, c) = bv[c];
    for (std::size_t j = 0; j < k; ++j) {
      if (t + j + 1 < k) continue;
      const std::size_t src = t + j + 1 - k;
      for (std::size_t c = 0; c < ch; ++c) out(t, c) += wv(j, c) * xv(src, c);
    }
  }
  Node* px = x.node();
  Node* pw = weight.node();
  Node* pb = bias.node();
  return make_result(std::move(out), {x, weight, bias}, [px, pw, pb, t_len, ch, k](Node& self) {
    const NumArray& xv = px->val();
    const NumArray& wv = pw->val();
    NumArray* gx = px->requires_grad ? &px->grad_buffer() : nullptr;
    NumArray* gw = pw->requires_grad ? &pw->grad_buffer() : nullptr;
    NumArray* gb = pb->requires_grad ? &pb->grad_buffer() : nullptr;
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        const double g = self.grad(t, c);
        if (gb) (*gb)[c] += g;
        for (std::size_t j = 0; j < k; ++j) {
          if (t + j + 1 < k) continue;
          const std::size_t src = t + j + 1 - k;
          if (gx) (*gx)(src, c) += wv(j, c) * g;
          if (gw) (*gw)(j, c) += xv(src, c) * g;
        }
      }
    }
  });
}

Var diag_scan(const Var& u, const Var& decay_logits, const Var& gate, const Var& readout) {
  const NumArray& uv = u.value();
  const NumArray& lv = decay_logits.value();
  const NumArray& gv = gate.value();
  const NumArray& rv = readout.value();
  const std::size_t t_len = uv.rows(), ch = uv.cols(), ns = lv.cols();
  require(lv.rows() == ch && rv.rows() == ch && rv.cols() == ns, "diag_scan: decay/readout must be [C x N]");
  require(gv.rows() == t_len && gv.cols() == ns, "diag_scan: gate must be [T x N]");
  std::vector<double> decay(ch * ns);
  for (std::size_t i = 0; i < decay.size(); ++i) decay[i] = sigmoid_scalar(lv[i]);
  std::vector<double> states(t_len * ch * ns);
  NumArray out = NumArray::matrix(t_len, ch);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      double y = 0.0;
      for (std::size_t n = 0; n < ns; ++n) {
        const double prev = t ? states[((t - 1) * ch + c) * ns + n] : 0.0;
        const double h = decay[c * ns + n] * prev + gv(t, n) * uv(t, c);
        states[(t * ch + c) * ns + n] = h;
        y += rv(c, n) * h;
      }
      out(t, c) = y;
    }
  }
  Node* pu = u.node();
  Node* pl = decay_logits.node();
  Node* pg = gate.node();
  Node* pr = readout.node();
  return make_result(std::move(out), {u, decay_logits, gate, readout},
                     [pu, pl, pg, pr, t_len, ch, ns, decay = std::move(decay), states = std::move(states)](Node& self) {
                       const NumArray& uv = pu->val();
                       const NumArray& gv = pg->val();
                       const NumArray& rv = pr->val();
                       std::vector<double> carry(ch * ns, 0.0), gdecay(ch * ns, 0.0);
                       NumArray* gu = pu->requires_grad ? &pu->grad_buffer() : nullptr;
                       NumArray* gg = pg->requires_grad ? &pg->grad_buffer() : nullptr;
                       NumArray* gr = pr->requires_grad ? &pr->grad_buffer() : nullptr;
                       for (std::size_t t = t_len; t-- > 0;) {
                         for (std::size_t c = 0; c < ch; ++c) {
                           const double gy = self.grad(t, c);
                           for (std::size_t n = 0; n < ns; ++n) {
                             const std::size_t cn = c * ns + n;
                             const double h = states[(t * ch + c) * ns + n];
                             const double gh = rv(c, n) * gy + decay[cn] * carry[cn];
                             carry[cn] = gh;
                             if (gr) (*gr)(c, n) += gy * h;
                             if (t) gdecay[cn] += gh * states[((t - 1) * ch + c) * ns + n];
                             if (gg) (*gg)(t, n) += gh * uv(t, c);
                             if (gu) (*gu)(t, c) += gh * gv(t, n);
                           }
                         }
                       }
                       if (pl->requires_grad) {
                         NumArray& gl = pl->grad_buffer();
                         for (std::size_t i = 0; i < gdecay.size(); ++i)
                           gl[i] += gdecay[i] * decay[i] * (1.0 - decay[i]);
                       }
                     });
}

Var attention_stats(const Var& x, const Var& alpha, double eps) {
  const NumArray& xv = x.value();
  const NumArray& av = alpha.value();
  const std::size_t t_len = xv.rows(), dim = xv.cols();
  require(av.size() == t_len, "attention_stats: one weight per row required");
  std::vector<double> mu(dim, 0.0), var(dim, 0.0), sigma(dim);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t d = 0; d < dim; ++d) mu[d] += av[t] * xv(t, d);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t d = 0; d < dim; ++d) {
      const double dev = xv(t, d) - mu[d];
      var[d] += av[t] * dev * dev;
    }
  NumArray out = NumArray::matrix(1, 2 * dim);
  for (std::size_t d = 0; d < dim; ++d) {
    sigma[d] = std::sqrt(std::max(var[d], 0.0) + eps);
    out[d] = mu[d];
    out[dim + d] = sigma[d];
  }
  Node* px = x.node();
  Node* pa = alpha.node();
  return make_result(std::move(out), {x, alpha},
                     [px, pa, t_len, dim, mu = std::move(mu), var = std::move(var), sigma = std::move(sigma)](Node& self) {
                       const NumArray& xv = px->val();
                       const NumArray& av = pa->val();
                       std::vector<double> gvar(dim), spread(dim, 0.0);
                       for (std::size_t d = 0; d < dim; ++d) {
                         gvar[d] = var[d] > 0.0 ? self.grad[dim + d] / (2.0 * sigma[d]) : 0.0;
                         for (std::size_t t = 0; t < t_len; ++t) spread[d] += av[t] * (xv(t, d) - mu[d]);
                       }
                       if (pa->requires_grad) {
                         NumArray& ga = pa->grad_buffer();
                         for (std::size_t t = 0; t < t_len; ++t) {
                           double s = 0.0;
                           for (std::size_t d = 0; d < dim; ++d) {
                             const double dev = xv(t, d) - mu[d];
                             s += self.grad[d] * xv(t, d) + gvar[d] * (dev * dev - 2.0 * spread[d] * xv(t, d));
                           }
                           ga[t] += s;
                         }
                       }
                       if (px->requires_grad) {
                         NumArray& gx = px->grad_buffer();
                         for (std::size_t t = 0; t < t_len; ++t)
                           for (std::size_t d = 0; d < dim; ++d) {
                             const double dev = xv(t, d) - mu[d];
                             gx(t, d) += self.grad[d] * av[t] + gvar[d] * 2.0 * av[t] * (dev - spread[d]);
                           }
                       }
                     });
}

}  // namespace vaf
