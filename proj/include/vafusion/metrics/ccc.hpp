#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "json.hpp"
#include "vafusion/numerics/array.hpp"
#include "vafusion/numerics/autograd.hpp"

namespace vaf {

/// Concordance correlation coefficient with population (1/N) statistics.
///
/// Returns 0 when var_t + var_p + (mu_t - mu_p)^2 < 1e-12; `degenerate` records that case.
struct CccValue {
  double value = 0.0;
  bool degenerate = false;
};
CccValue ccc_checked(std::span<const double> targets, std::span<const double> predictions);
inline double ccc(std::span<const double> targets, std::span<const double> predictions) {
  return ccc_checked(targets, predictions).value;
}

struct LossConfig {
  double weight_valence = 0.5;
  double weight_arousal = 0.5;
  double lambda_ccc = 1.0;  // MAE weight is 1 - lambda_ccc
  double invalid_sentinel = -5.0;

  void validate() const;
};

/// True where the target is not the sentinel and lies in [-1, 1].
Mask mask_invalid(const NumArray& targets, double sentinel);

/// Differentiable CCC between column `col` of `predictions` and of `targets`,
/// over rows where `valid(row, col)` holds. Needs at least two valid rows.
Var ccc_column(const NumArray& targets, const Var& predictions, const Mask& valid, std::size_t col);
/// Differentiable mean absolute error of one column over valid rows.
Var mae_column(const NumArray& targets, const Var& predictions, const Mask& valid, std::size_t col);

struct HybridLoss {
  Var loss;
  /// A dimension with fewer than two valid frames contributes nothing and is flagged.
  std::array<bool, 2> skipped{false, false};
  std::array<double, 2> ccc{0.0, 0.0};
};

/// sum_d w_d * (lambda * (1 - CCC_d) + (1 - lambda) * MAE_d) over valid frames of a [P x 2] batch.
HybridLoss hybrid_loss(const NumArray& targets, const Var& predictions, const Mask& valid, const LossConfig& cfg);

struct CccReport {
  double ccc_valence = 0.0;
  double ccc_arousal = 0.0;
  double mean = 0.0;
  std::array<std::size_t, 2> n_valid{0, 0};

  nlohmann::json to_json() const;
};

/// Per-dimension CCC over valid rows of [P x 2] targets and predictions.
CccReport ccc_report(const NumArray& targets, const NumArray& predictions, const Mask& valid);

}  // namespace vaf
