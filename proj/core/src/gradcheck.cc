// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "transmask/ops.h"
#include "transmask/random.h"

namespace transmask {

GradCheckResult check_gradients(std::string name,
                                const std::function<Tensor()> &loss_fn,
                                std::vector<Tensor> inputs,
                                const GradCheckOptions &options) {
  if (precision() != Precision::kFloat64) {
    throw ContractError("gradient checks must run in 64-bit mode");
  }
  for (Tensor &t : inputs) {
    if (!t.is_leaf() || !t.requires_grad()) {
      throw ContractError("gradient check inputs must be leaves with grad");
    }
    t.zero_grad();
  }
  backward(loss_fn());

  GradCheckResult result;
  result.name = std::move(name);
  result.tolerance = options.tolerance;

  std::vector<std::vector<double>> analytic, numeric;
  double scale = 0.0;
  for (Tensor &t : inputs) {
    analytic.emplace_back(t.numel(), 0.0);
    if (t.has_grad()) {
      std::copy(t.grad().begin(), t.grad().end(), analytic.back().begin());
    }
    numeric.emplace_back(t.numel(), 0.0);
    auto values = t.mutable_data();
    NoGradGuard no_grad;
    for (int64_t i = 0; i < t.numel(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = loss_fn().item();
      values[i] = saved - options.step;
      const double down = loss_fn().item();
      values[i] = saved;
      const double d = (up - down) / (2.0 * options.step);
      numeric.back()[i] = d;
      scale = std::max(scale, std::abs(d));
    }
    t.zero_grad();
  }

  const double floor = std::max(options.floor_fraction * scale, 1e-12);
  for (size_t k = 0; k < inputs.size(); ++k) {
    for (size_t i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k][i];
      const double n = numeric[k][i];
      const double denom = std::max({std::abs(a), std::abs(n), floor});
      result.max_rel_error =
          std::max(result.max_rel_error, std::abs(a - n) / denom);
      ++result.entries;
    }
  }
  return result;
}

Tensor random_projection_loss(const Tensor &out, uint64_t seed) {
  Rng rng(seed);
  Tensor weights = uniform_tensor(out.shape(), rng, -1.0, 1.0);
  return sum(mul(out, weights));
}

}  // namespace transmask
