#pragma once

// Reference implementations used only by the tests. They work on plain nested
// vectors and share no code with the library, so agreement with the library
// is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c = zeros(a.size(), b.empty() ? 0 : b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < b.size(); ++k) s += static_cast<long double>(a[i][k]) * b[k][j];
      c[i][j] = static_cast<double>(s);
    }
  return c;
}

inline Mat affine(const Mat& x, const Mat& w, const std::vector<double>& b) {
  Mat y = matmul(x, w);
  for (auto& row : y)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b.empty() ? 0.0 : b[j];
  return y;
}

// Standard normal CDF by composite Simpson integration of the density from -12.
inline double normal_cdf(double x) {
  const double lo = -12.0;
  if (x <= lo) return 0.0;
  const int n = 40000;
  const double h = (x - lo) / n;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double s = pdf(lo) + pdf(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(lo + i * h);
  return s * h / 3.0;
}

inline double gelu(double x) { return x * normal_cdf(x); }

// Plain exponentiation without max shift; callers keep logits moderate.
inline std::vector<double> softmax(const std::vector<double>& z, const std::vector<bool>& keep = {}) {
  std::vector<double> e(z.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!keep.empty() && !keep[i]) continue;
    e[i] = std::exp(z[i]);
    s += e[i];
  }
  for (double& v : e) v /= s;
  return e;
}

inline std::vector<double> layer_norm(const std::vector<double>& x, double eps = 1e-5) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  std::vector<double> y;
  for (double v : x) y.push_back((v - mean) / std::sqrt(var + eps));
  return y;
}

inline Mat layer_norm_rows(const Mat& x, const std::vector<double>& gamma, const std::vector<double>& beta) {
  Mat y;
  for (const auto& row : x) {
    auto n = layer_norm(row);
    for (std::size_t j = 0; j < n.size(); ++j) n[j] = n[j] * gamma[j] + beta[j];
    y.push_back(n);
  }
  return y;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }

struct Dense {
  Mat w;
  std::vector<double> b;
  Mat operator()(const Mat& x) const { return affine(x, w, b); }
};

// Multi-head attention computed head by head with explicit loops.
inline Mat attention(const Mat& query_in, const Mat& key_in, const Mat& value_in, const Dense& wq, const Dense& wk,
                     const Dense& wv, const Dense& wo, std::size_t heads, const std::vector<bool>& key_valid = {}) {
  const Mat q = wq(query_in), k = wk(key_in), v = wv(value_in);
  const std::size_t d = q[0].size(), hd = d / heads;
  Mat concat = zeros(q.size(), d);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::vector<double> scores(k.size());
      for (std::size_t j = 0; j < k.size(); ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += q[i][h * hd + c] * k[j][h * hd + c];
        scores[j] = s / std::sqrt(static_cast<double>(hd));
      }
      auto p = softmax(scores, key_valid);
      for (std::size_t c = 0; c < hd; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) acc += p[j] * v[j][h * hd + c];
        concat[i][h * hd + c] = acc;
      }
    }
  }
  return wo(concat);
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

// Concordance correlation from its textbook definition (population moments).
inline double ccc(const std::vector<double>& t, const std::vector<double>& p) {
  const double mt = mean(t), mp = mean(p);
  double vt = 0, vp = 0, cov = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    vt += (t[i] - mt) * (t[i] - mt);
    vp += (p[i] - mp) * (p[i] - mp);
    cov += (t[i] - mt) * (p[i] - mp);
  }
  vt /= t.size();
  vp /= t.size();
  cov /= t.size();
  const double den = vt + vp + (mt - mp) * (mt - mp);
  return den < 1e-12 ? 0.0 : 2.0 * cov / den;
}

inline double pearson(const std::vector<double>& t, const std::vector<double>& p) {
  const double mt = mean(t), mp = mean(p);
  double vt = 0, vp = 0, cov = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    vt += (t[i] - mt) * (t[i] - mt);
    vp += (p[i] - mp) * (p[i] - mp);
    cov += (t[i] - mt) * (p[i] - mp);
  }
  return cov / std::sqrt(vt * vp);
}

// Window starts by exhaustive search: every multiple of S that fits, then the
// last feasible start if some frame is still uncovered.
inline std::vector<std::size_t> window_starts(std::size_t T, std::size_t L, std::size_t S) {
  if (T <= L) return {0};
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s + L <= T; ++s)
    if (s % S == 0) out.push_back(s);
  std::vector<bool> hit(T, false);
  for (auto s : out)
    for (std::size_t f = s; f < s + L; ++f) hit[f] = true;
  if (std::find(hit.begin(), hit.end(), false) != hit.end()) out.push_back(T - L);
  return out;
}

struct Span {
  std::size_t start, end;
  double v, a;
};

// Per-frame average built by visiting every frame of every span.
inline std::map<std::size_t, std::pair<double, double>> expand(const std::vector<Span>& spans) {
  std::map<std::size_t, std::vector<std::pair<double, double>>> hits;
  for (const auto& s : spans)
    for (std::size_t f = s.start; f < s.end; ++f) hits[f].push_back({s.v, s.a});
  std::map<std::size_t, std::pair<double, double>> out;
  for (const auto& [f, list] : hits) {
    double v = 0, a = 0;
    for (auto [x, y] : list) {
      v += x;
      a += y;
    }
    out[f] = {v / list.size(), a / list.size()};
  }
  return out;
}

// Closing then opening expressed on the run-length encoding.
inline std::vector<bool> smooth_rle(const std::vector<bool>& x, double min_gap_frames, double min_burst_frames) {
  struct Run {
    bool value;
    std::size_t length;
  };
  auto encode = [](const std::vector<bool>& s) {
    std::vector<Run> runs;
    for (bool b : s) {
      if (!runs.empty() && runs.back().value == b)
        ++runs.back().length;
      else
        runs.push_back({b, 1});
    }
    return runs;
  };
  auto decode = [](const std::vector<Run>& runs) {
    std::vector<bool> s;
    for (const auto& r : runs) s.insert(s.end(), r.length, r.value);
    return s;
  };
  auto runs = encode(x);
  for (std::size_t i = 1; i + 1 < runs.size(); ++i)
    if (!runs[i].value && static_cast<double>(runs[i].length) < min_gap_frames) runs[i].value = true;
  runs = encode(decode(runs));
  for (auto& r : runs)
    if (r.value && static_cast<double>(r.length) < min_burst_frames) r.value = false;
  return decode(runs);
}

}  // namespace oracle
