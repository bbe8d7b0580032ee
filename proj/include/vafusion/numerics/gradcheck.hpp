#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vafusion/numerics/autograd.hpp"

namespace vaf {

struct GradCheckOptions {
  double step = 1e-3;
  /// Coordinates probed per tensor, sampled with the check's seed; 0 probes all.
  std::size_t max_coords_per_tensor = 0;
  /// When set, every evaluation runs in train mode with this dropout seed.
  std::optional<std::uint64_t> train_seed;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_coordinate;
  std::size_t coordinates_checked = 0;
};

/// Scalar loss built from parameters fetched through the supplied context.
using LossFn = std::function<Var(Context&)>;

/// Compares analytic gradients of `loss` with respect to `targets` against
/// fourth-order central differences (five-point stencil). Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps finite-difference
/// round-off on gradients that are exactly zero from counting as relative error. Throws NumericError on a non-finite loss.
GradCheckResult grad_check(const LossFn& loss, const std::vector<Parameter*>& targets, std::uint64_t seed,
                           const GradCheckOptions& opts = {});

}  // namespace vaf
