#pragma once

#include <cstddef>
#include <vector>

#include "vafusion/numerics/array.hpp"
#include "vafusion/numerics/autograd.hpp"

namespace vaf {

// ---------------------------------------------------------------------------
// Value-level functions (no graph)
// ---------------------------------------------------------------------------

/// Softmax over the last axis restricted to `mask`. Throws NumericError for a
/// row without any valid entry.
NumArray masked_softmax(const NumArray& logits, const Mask& mask);
/// Exact GELU, x * Phi(x).
NumArray gelu(const NumArray& x);
NumArray layer_norm(const NumArray& x, const NumArray& gamma, const NumArray& beta, double eps = 1e-5);

/// Sum that does not depend on the order of `values` (sorts a copy first).
double order_invariant_sum(std::vector<double>& values);

// ---------------------------------------------------------------------------
// Differentiable ops. Shapes use the matrix view (rows x cols).
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// x W + b with W stored [in x out] and b a [1 x out] row (b may be empty).
Var linear(const Var& x, const Var& weight, const Var& bias);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// Adds a [1 x cols] row to every row of `a`.
Var add_row(const Var& a, const Var& row);

Var gelu(const Var& x);
Var tanh_act(const Var& x);
Var sigmoid(const Var& x);
Var silu(const Var& x);

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

struct SoftmaxOptions {
  /// Rows with no valid entry produce zeros instead of throwing.
  bool allow_empty_rows = false;
  /// Normalizer summed in sorted order so column permutations permute outputs bit-exactly.
  bool order_invariant = false;
};
Var masked_softmax(const Var& logits, const Mask* mask, SoftmaxOptions opts = {});
inline Var softmax(const Var& logits) { return masked_softmax(logits, nullptr); }

/// Inverted dropout; identity outside train mode or for p == 0.
Var dropout(const Var& x, double p, Context& ctx);

/// Scaled dot-product attention on already-projected inputs, split into `heads`
/// column blocks: q [Lq x d], k,v [Lk x d]. Scale 1/sqrt(d/heads).
/// `key_mask`, when given, is a [1 x Lk] validity row.
Var attention(const Var& q, const Var& k, const Var& v, std::size_t heads, const Mask* key_mask = nullptr);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& x, std::size_t begin, std::size_t count);
Var slice_cols(const Var& x, std::size_t begin, std::size_t count);
Var transpose(const Var& x);
Var sum_all(const Var& x);
Var mean_all(const Var& x);
/// Elementwise mean of equally shaped arrays; invariant to their order.
Var mean_of(const std::vector<Var>& parts);
/// Per-row convex combination: out[l] = sum_e weights[l,e] * parts[e][l].
/// Invariant to a joint reordering of parts and weight columns.
Var mixture(const std::vector<Var>& parts, const Var& weights);

/// Depthwise causal 1-D convolution over rows (time). weight [K x C], bias [1 x C].
/// out[t,c] = bias[c] + sum_j weight[j,c] * x[t-K+1+j, c], zero left padding.
Var causal_conv1d(const Var& x, const Var& weight, const Var& bias);

/// Diagonal linear recurrence with per-(channel, state) decay a = sigmoid(decay_logits):
///   h[t,c,n] = a[c,n] h[t-1,c,n] + gate[t,n] u[t,c],   y[t,c] = sum_n readout[c,n] h[t,c,n]
/// u [T x C], decay_logits and readout [C x N], gate [T x N].
Var diag_scan(const Var& u, const Var& decay_logits, const Var& gate, const Var& readout);

/// Weighted mean and weighted standard deviation pooling of x [T x D] with
/// weights alpha [1 x T]: returns [1 x 2D] = [mu ; sqrt(max(var, 0) + eps)].
Var attention_stats(const Var& x, const Var& alpha, double eps = 1e-9);

}  // namespace vaf
