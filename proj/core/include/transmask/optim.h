// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "transmask/tensor.h"

namespace transmask {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam update of params[i] with grads[i]. State is sized
// on first use.
void adam_step(std::vector<Tensor> &params,
               const std::vector<std::vector<double>> &grads, AdamState &state,
               const AdamOptions &options);

// Current gradients of `params` (zeros where none were accumulated).
std::vector<std::vector<double>> collect_grads(const std::vector<Tensor> &params);

double global_grad_norm(const std::vector<std::vector<double>> &grads);

// Rescales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::vector<std::vector<double>> &grads, double max_norm);

}  // namespace transmask
