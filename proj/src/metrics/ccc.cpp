#include "vafusion/metrics/ccc.hpp"

#include <cmath>
#include <vector>

#include "vafusion/errors.hpp"
#include "vafusion/numerics/ops.hpp"

namespace vaf {

namespace {

constexpr double kDegenerate = 1e-12;

struct Moments {
  double mean_t = 0.0, mean_p = 0.0, var_t = 0.0, var_p = 0.0, cov = 0.0;
  double denom() const { return var_t + var_p + (mean_t - mean_p) * (mean_t - mean_p); }
};

Moments moments(std::span<const double> t, std::span<const double> p) {
  Moments m;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    m.mean_t += t[i];
    m.mean_p += p[i];
  }
  m.mean_t /= n;
  m.mean_p /= n;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = t[i] - m.mean_t, dp = p[i] - m.mean_p;
    m.var_t += dt * dt;
    m.var_p += dp * dp;
    m.cov += dt * dp;
  }
  m.var_t /= n;
  m.var_p /= n;
  m.cov /= n;
  return m;
}

void collect(const NumArray& targets, const NumArray& predictions, const Mask& valid, std::size_t col,
             std::vector<std::size_t>& rows, std::vector<double>& t, std::vector<double>& p) {
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    if (!valid(r, col)) continue;
    rows.push_back(r);
    t.push_back(targets(r, col));
    p.push_back(predictions(r, col));
  }
}

void check_shapes(const NumArray& targets, const NumArray& predictions, const Mask& valid) {
  if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols() || valid.rows() != targets.rows() ||
      valid.cols() != targets.cols()) {
    throw ShapeError("loss: targets, predictions and mask shapes differ");
  }
}

}  // namespace

CccValue ccc_checked(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) throw ShapeError("ccc: sequences differ in length");
  if (targets.size() < 2) throw ShapeError("ccc: need at least two frames");
  const Moments m = moments(targets, predictions);
  const double d = m.denom();
  if (d < kDegenerate) return {0.0, true};
  return {2.0 * m.cov / d, false};
}

void LossConfig::validate() const {
  if (weight_valence < 0.0 || weight_arousal < 0.0 || weight_valence + weight_arousal <= 0.0) {
    throw ConfigError("loss: dimension weights must be nonnegative with a positive sum");
  }
  if (lambda_ccc < 0.0 || lambda_ccc > 1.0) throw ConfigError("loss: lambda_ccc must lie in [0,1]");
  if (invalid_sentinel >= -1.0 && invalid_sentinel <= 1.0) throw ConfigError("loss: sentinel must lie outside [-1,1]");
}

Mask mask_invalid(const NumArray& targets, double sentinel) {
  Mask m(targets.rows(), targets.cols(), false);
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    for (std::size_t c = 0; c < targets.cols(); ++c) {
      const double v = targets(r, c);
      m.set(r, c, v != sentinel && v >= -1.0 && v <= 1.0);
    }
  }
  return m;
}

Var ccc_column(const NumArray& targets, const Var& predictions, const Mask& valid, std::size_t col) {
  check_shapes(targets, predictions.value(), valid);
  std::vector<std::size_t> rows;
  std::vector<double> t, p;
  collect(targets, predictions.value(), valid, col, rows, t, p);
  if (rows.size() < 2) throw ShapeError("ccc_column: need at least two valid frames");
  const Moments m = moments(t, p);
  const double d = m.denom();
  const bool degenerate = d < kDegenerate;
  const double value = degenerate ? 0.0 : 2.0 * m.cov / d;
  Node* pp = predictions.node();
  const std::size_t cols = predictions.cols();
  return make_result(NumArray::scalar(value), {predictions},
                     [pp, rows = std::move(rows), t = std::move(t), p = std::move(p), m, d, degenerate, col,
                      cols](Node& self) {
                       if (degenerate) return;
                       NumArray& g = pp->grad_buffer();
                       const double n = static_cast<double>(rows.size());
                       const double gs = self.grad[0];
                       for (std::size_t i = 0; i < rows.size(); ++i) {
                         const double dcov = (t[i] - m.mean_t) / n;
                         const double dden = 2.0 * (p[i] - m.mean_p) / n - 2.0 * (m.mean_t - m.mean_p) / n;
                         g[rows[i] * cols + col] += gs * (2.0 * dcov / d - 2.0 * m.cov * dden / (d * d));
                       }
                     });
}

Var mae_column(const NumArray& targets, const Var& predictions, const Mask& valid, std::size_t col) {
  check_shapes(targets, predictions.value(), valid);
  std::vector<std::size_t> rows;
  std::vector<double> t, p;
  collect(targets, predictions.value(), valid, col, rows, t, p);
  if (rows.empty()) throw ShapeError("mae_column: no valid frames");
  double s = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) s += std::abs(p[i] - t[i]);
  const double n = static_cast<double>(rows.size());
  Node* pp = predictions.node();
  const std::size_t cols = predictions.cols();
  return make_result(NumArray::scalar(s / n), {predictions},
                     [pp, rows = std::move(rows), t = std::move(t), p = std::move(p), n, col, cols](Node& self) {
                       NumArray& g = pp->grad_buffer();
                       for (std::size_t i = 0; i < rows.size(); ++i) {
                         const double diff = p[i] - t[i];
                         const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                         g[rows[i] * cols + col] += self.grad[0] * sign / n;
                       }
                     });
}

HybridLoss hybrid_loss(const NumArray& targets, const Var& predictions, const Mask& valid, const LossConfig& cfg) {
  check_shapes(targets, predictions.value(), valid);
  if (targets.cols() != 2) throw ShapeError("hybrid_loss: expected [frames x 2] (valence, arousal)");
  HybridLoss out;
  const double weights[2] = {cfg.weight_valence, cfg.weight_arousal};
  Var total;
  for (std::size_t d = 0; d < 2; ++d) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < valid.rows(); ++r) n += valid(r, d) ? 1 : 0;
    if (n < 2) {
      out.skipped[d] = true;
      continue;
    }
    Var term;
    if (cfg.lambda_ccc > 0.0) {
      Var c = ccc_column(targets, predictions, valid, d);
      out.ccc[d] = c.value()[0];
      // lambda * (1 - ccc) written as lambda - lambda * ccc.
      term = scale(c, -cfg.lambda_ccc);
      term = add(term, Var::constant(NumArray::scalar(cfg.lambda_ccc)));
    }
    if (cfg.lambda_ccc < 1.0) {
      Var mae = scale(mae_column(targets, predictions, valid, d), 1.0 - cfg.lambda_ccc);
      term = term ? add(term, mae) : mae;
    }
    term = scale(term, weights[d]);
    total = total ? add(total, term) : term;
  }
  out.loss = total ? total : Var::constant(NumArray::scalar(0.0));
  return out;
}

nlohmann::json CccReport::to_json() const {
  return nlohmann::json{{"ccc_valence", ccc_valence},
                        {"ccc_arousal", ccc_arousal},
                        {"ccc_mean", mean},
                        {"n_valid", {{"valence", n_valid[0]}, {"arousal", n_valid[1]}}}};
}

CccReport ccc_report(const NumArray& targets, const NumArray& predictions, const Mask& valid) {
  check_shapes(targets, predictions, valid);
  CccReport rep;
  double vals[2] = {0.0, 0.0};
  for (std::size_t d = 0; d < 2; ++d) {
    std::vector<std::size_t> rows;
    std::vector<double> t, p;
    collect(targets, predictions, valid, d, rows, t, p);
    rep.n_valid[d] = rows.size();
    if (rows.size() >= 2) vals[d] = ccc(t, p);
  }
  rep.ccc_valence = vals[0];
  rep.ccc_arousal = vals[1];
  rep.mean = (vals[0] + vals[1]) / 2.0;
  return rep;
}

}  // namespace vaf
