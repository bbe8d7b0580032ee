#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vafusion/numerics/gradcheck.hpp"

namespace testing {

struct GradOutcome {
  std::string name;
  bool full_model = false;
  vaf::GradCheckResult result;
};

/// Finite-difference checks of every differentiable op, layer and full model at
/// tiny sizes. Inputs and initial parameters are drawn from `seed`. Tensors with
/// more than `coords` entries are probed at `coords` sampled positions.
std::vector<GradOutcome> run_grad_suite(std::uint64_t seed, std::size_t coords);

}  // namespace testing
