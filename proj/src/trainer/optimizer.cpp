#include "vafusion/trainer/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "vafusion/errors.hpp"

namespace vaf {

AdamW::AdamW(const ParameterSet& params, AdamWConfig cfg) : cfg_(cfg) {
  for (const Parameter& p : params) {
    m_.emplace_back(p.value.shape(), 0.0);
    v_.emplace_back(p.value.shape(), 0.0);
  }
}

void AdamW::step(ParameterSet& params) {
  if (params.size() != m_.size()) throw ShapeError("optimizer state does not match the parameter set");
  ++t_;
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  const double lr = cfg_.learning_rate;
  std::size_t i = 0;
  for (Parameter& p : params) {
    NumArray& m = m_[i];
    NumArray& v = v_[i];
    ++i;
    if (p.grad.size() != p.value.size()) continue;  // never touched by a backward pass
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p.value[k]);
    }
  }
}

void AdamW::restore(std::uint64_t steps, std::vector<NumArray> m, std::vector<NumArray> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw ShapeError("optimizer state count mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].same_shape(m_[i]) || !v[i].same_shape(v_[i])) throw ShapeError("optimizer state shape mismatch");
  }
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter& p : params)
    for (double g : p.grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter& p : params)
      for (double& g : p.grad.values()) g *= s;
  }
  return norm;
}

double PlateauScheduler::step(double metric, double lr) {
  if (!best_ || metric > *best_) {
    best_ = metric;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ > patience_) {
    bad_epochs_ = 0;
    return std::max(min_lr_, lr * factor_);
  }
  return lr;
}

}  // namespace vaf
