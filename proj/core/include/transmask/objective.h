// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "transmask/tensor.h"

namespace transmask {

inline constexpr double kSiSnrEps = 1e-8;
inline constexpr int kMaxPitSpeakers = 4;

// Scale-invariant SNR in dB of estimate[N] against reference[N], both
// mean-centred first. Returns a one-element tensor differentiable in both
// arguments. Throws DegenerateReferenceError for an all-zero reference.
Tensor si_snr(const Tensor &estimate, const Tensor &reference);
double si_snr_value(const Tensor &estimate, const Tensor &reference);

struct PitResult {
  Tensor loss;            // [1]; minus the mean SI-SNR of the best pairing
  std::vector<int> perm;  // estimate row perm[i] is paired with reference i
  double mean_si_snr() const { return -loss.item(); }
};

// Utterance-level permutation-invariant loss over estimates[n, N] and
// references[n, N], n <= 4. Exhaustive search; among equal scores the
// lexicographically smallest permutation wins.
PitResult upit_loss(const Tensor &estimates, const Tensor &references);

// Mean over speakers of SI-SNR(estimate, ref) - SI-SNR(mixture, ref) under
// the best permutation.
double si_snr_improvement(const Tensor &estimates, const Tensor &references,
                          const Tensor &mixture);

}  // namespace transmask
