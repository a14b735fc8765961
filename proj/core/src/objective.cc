// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "transmask/errors.h"
#include "transmask/ops.h"

namespace transmask {

namespace {

Tensor centered(const Tensor &x) { return sub(x, mean(x)); }

void check_pair(const Tensor &estimate, const Tensor &reference) {
  if (estimate.rank() != 1 || estimate.shape() != reference.shape()) {
    throw DimensionError("si_snr expects two equal 1-D signals, got " +
                         shape_str(estimate.shape()) + " and " +
                         shape_str(reference.shape()));
  }
  if (estimate.dim(0) < 2) {
    throw ContractError("si_snr needs at least 2 samples");
  }
  const auto ref = reference.data();
  if (std::all_of(ref.begin(), ref.end(), [](double v) { return v == 0.0; })) {
    throw DegenerateReferenceError("si_snr reference is identically zero");
  }
}

}  // namespace

Tensor si_snr(const Tensor &estimate, const Tensor &reference) {
  check_pair(estimate, reference);
  Tensor e = centered(estimate);
  Tensor s = centered(reference);
  Tensor alpha = div(sum(mul(e, s)), add_scalar(sum(mul(s, s)), kSiSnrEps));
  Tensor target = mul(alpha, s);
  Tensor noise = sub(e, target);
  Tensor ratio = div(add_scalar(sum(mul(target, target)), kSiSnrEps),
                     add_scalar(sum(mul(noise, noise)), kSiSnrEps));
  return scale(log(ratio), 10.0 / std::log(10.0));
}

double si_snr_value(const Tensor &estimate, const Tensor &reference) {
  NoGradGuard no_grad;
  return si_snr(estimate, reference).item();
}

PitResult upit_loss(const Tensor &estimates, const Tensor &references) {
  if (estimates.rank() != 2 || estimates.shape() != references.shape()) {
    throw ContractError("upit_loss: estimates " + shape_str(estimates.shape()) +
                        " and references " + shape_str(references.shape()) +
                        " must be equal [n_speakers, N]");
  }
  const int n = static_cast<int>(estimates.dim(0));
  if (n < 1 || n > kMaxPitSpeakers) {
    throw ContractError("upit_loss supports 1 to " +
                        std::to_string(kMaxPitSpeakers) + " speakers, got " +
                        std::to_string(n));
  }
  // pair[e][r]: SI-SNR of estimate row e against reference row r.
  std::vector<std::vector<Tensor>> pair(static_cast<size_t>(n));
  for (int e = 0; e < n; ++e) {
    for (int r = 0; r < n; ++r) {
      pair[e].push_back(si_snr(select(estimates, e), select(references, r)));
    }
  }
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -INFINITY;
  do {
    double score = 0.0;
    for (int r = 0; r < n; ++r) score += pair[perm[r]][r].item();
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Tensor total = pair[best[0]][0];
  for (int r = 1; r < n; ++r) total = add(total, pair[best[r]][r]);
  return {scale(total, -1.0 / n), best};
}

double si_snr_improvement(const Tensor &estimates, const Tensor &references,
                          const Tensor &mixture) {
  NoGradGuard no_grad;
  PitResult pit = upit_loss(estimates, references);
  const int64_t n = references.dim(0);
  double base = 0.0;
  for (int64_t r = 0; r < n; ++r) base += si_snr_value(mixture, select(references, r));
  return pit.mean_si_snr() - base / static_cast<double>(n);
}

}  // namespace transmask
