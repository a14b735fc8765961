// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>

#include "transmask/tensor.h"

namespace transmask {

// Seeded generator shared by parameter init, data synthesis and tests.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Inclusive range.
  int64_t randint(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }
  std::mt19937_64 &engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Tensor uniform_tensor(Shape shape, Rng &rng, double lo, double hi,
                      bool requires_grad = false);
Tensor normal_tensor(Shape shape, Rng &rng, double stddev = 1.0,
                     bool requires_grad = false);

// Stable 64-bit mix of a seed with a stream index (splitmix64 finaliser).
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace transmask
