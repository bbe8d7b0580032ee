#include "vafusion/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vafusion/errors.hpp"
#include "vafusion/numerics/rng.hpp"

namespace vaf {

namespace {

Context make_context(const GradCheckOptions& opts, bool record) {
  if (opts.train_seed) return Context::training(*opts.train_seed, record);
  return record ? Context::eval_with_grad() : Context::inference();
}

double evaluate(const LossFn& loss, const GradCheckOptions& opts) {
  Context ctx = make_context(opts, false);
  const double v = loss(ctx).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& loss, const std::vector<Parameter*>& targets, std::uint64_t seed,
                           const GradCheckOptions& opts) {
  for (Parameter* p : targets) p->grad.fill(0.0);
  {
    Context ctx = make_context(opts, true);
    Var root = loss(ctx);
    if (root.value().size() != 1) throw ShapeError("grad_check: loss must be a scalar");
    if (!std::isfinite(root.value()[0])) throw NumericError("grad_check: non-finite loss");
    backward(root);
  }
  std::vector<NumArray> analytic;
  analytic.reserve(targets.size());
  for (Parameter* p : targets) analytic.push_back(p->grad);

  Rng rng(seed);
  GradCheckResult result;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Parameter& p = *targets[t];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opts.max_coords_per_tensor && coords.size() > opts.max_coords_per_tensor) {
      rng.shuffle(coords);
      coords.resize(opts.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double orig = p.value[i];
      const double h = opts.step;
      auto at = [&](double offset) {
        p.value[i] = orig + offset;
        return evaluate(loss, opts);
      };
      const double f2 = at(2 * h), f1 = at(h), b1 = at(-h), b2 = at(-2 * h);
      p.value[i] = orig;
      const double numeric = (-f2 + 8.0 * f1 - 8.0 * b1 + b2) / (12.0 * h);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_coordinate = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace vaf
