// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/random.h"

namespace transmask {

Tensor uniform_tensor(Shape shape, Rng &rng, double lo, double hi,
                      bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double &x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

Tensor normal_tensor(Shape shape, Rng &rng, double stddev, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double &x : v) x = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace transmask
