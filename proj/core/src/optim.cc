// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/optim.h"

#include <cmath>

#include "transmask/errors.h"

namespace transmask {

void adam_step(std::vector<Tensor> &params,
               const std::vector<std::vector<double>> &grads, AdamState &state,
               const AdamOptions &o) {
  if (grads.size() != params.size()) {
    throw ContractError("adam_step: " + std::to_string(grads.size()) +
                        " gradients for " + std::to_string(params.size()) +
                        " parameters");
  }
  if (state.m.empty()) {
    for (const Tensor &p : params) {
      state.m.emplace_back(static_cast<size_t>(p.numel()), 0.0);
      state.v.emplace_back(static_cast<size_t>(p.numel()), 0.0);
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    const auto &g = grads[i];
    if (g.size() != w.size() || state.m[i].size() != w.size()) {
      throw ContractError("adam_step: size mismatch for parameter " +
                          std::to_string(i));
    }
    auto &m = state.m[i];
    auto &v = state.v[i];
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] = quantize(w[j] - o.lr * m_hat / (std::sqrt(v_hat) + o.eps));
    }
  }
}

std::vector<std::vector<double>> collect_grads(
    const std::vector<Tensor> &params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const Tensor &p : params) {
    if (p.has_grad()) {
      out.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      out.emplace_back(static_cast<size_t>(p.numel()), 0.0);
    }
  }
  return out;
}

double global_grad_norm(const std::vector<std::vector<double>> &grads) {
  double sq = 0.0;
  for (const auto &g : grads) {
    for (double x : g) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::vector<std::vector<double>> &grads,
                      double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto &g : grads) {
      for (double &x : g) x *= k;
    }
  }
  return norm;
}

}  // namespace transmask
