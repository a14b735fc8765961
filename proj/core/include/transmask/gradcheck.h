// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "transmask/tensor.h"

namespace transmask {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Entries whose analytic and numeric magnitudes are both below
  // floor_fraction * max|numeric gradient| are compared against that floor
  // instead of their own magnitude.
  double floor_fraction = 1e-3;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int64_t entries = 0;
  bool passed() const { return max_rel_error <= tolerance; }
};

// Compares reverse-mode gradients of `loss_fn` with central finite
// differences for every entry of every tensor in `inputs`. The inputs must be
// leaves with requires_grad set; their grads are cleared on return. Call in
// Precision::kFloat64.
GradCheckResult check_gradients(std::string name,
                                const std::function<Tensor()> &loss_fn,
                                std::vector<Tensor> inputs,
                                const GradCheckOptions &options = {});

// Scalar reduction with fixed random weights, used to turn an op output into
// a loss whose gradient exercises every output entry.
Tensor random_projection_loss(const Tensor &out, uint64_t seed);

enum class GradCheckScale { kTiny, kSmall };

// The full suite: every differentiable op plus the separator blocks and the
// end-to-end separation loss. Runs in 64-bit mode.
std::vector<GradCheckResult> run_gradcheck_suite(GradCheckScale scale,
                                                 uint64_t seed = 7);

}  // namespace transmask
