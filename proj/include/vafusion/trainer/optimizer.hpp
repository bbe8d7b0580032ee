#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "vafusion/numerics/autograd.hpp"

namespace vaf {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// State is kept per parameter in ParameterSet order.
class AdamW {
 public:
  AdamW(const ParameterSet& params, AdamWConfig cfg);

  void step(ParameterSet& params);

  double learning_rate() const { return cfg_.learning_rate; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  const AdamWConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return t_; }

  const std::vector<NumArray>& first_moments() const { return m_; }
  const std::vector<NumArray>& second_moments() const { return v_; }
  /// Restores saved moments; shapes must match the parameters.
  void restore(std::uint64_t steps, std::vector<NumArray> m, std::vector<NumArray> v);

 private:
  AdamWConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<NumArray> m_, v_;
};

/// Global L2 norm of all gradients; when above `max_norm` (> 0) every gradient is scaled down to it.
double clip_grad_norm(ParameterSet& params, double max_norm);

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// improvement of a maximized metric, never going below `min_lr`.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, std::size_t patience, double min_lr)
      : factor_(factor), patience_(patience), min_lr_(min_lr) {}

  /// Returns the learning rate to use next.
  double step(double metric, double lr);
  std::optional<double> best() const { return best_; }

 private:
  double factor_;
  std::size_t patience_;
  double min_lr_;
  std::optional<double> best_;
  std::size_t bad_epochs_ = 0;
};

}  // namespace vaf
