// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gemm.h"

#include <Eigen/Core>
#include <vector>

#include "transmask/tensor.h"

namespace transmask::detail {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void gemm_impl(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
               const T *a, const T *b, T *c, bool accumulate) {
  Eigen::Map<const RowMat<T>> A(a, trans_a ? k : m, trans_a ? m : k);
  Eigen::Map<const RowMat<T>> B(b, trans_b ? n : k, trans_b ? k : n);
  Eigen::Map<RowMat<T>> C(c, m, n);
  if (!accumulate) C.setZero();
  if (!trans_a && !trans_b) {
    C.noalias() += A * B;
  } else if (trans_a && !trans_b) {
    C.noalias() += A.transpose() * B;
  } else if (!trans_a && trans_b) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() += A.transpose() * B.transpose();
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double *a, const double *b, double *c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (precision() == Precision::kFloat64) {
    gemm_impl(trans_a, trans_b, m, n, k, a, b, c, accumulate);
    return;
  }
  thread_local std::vector<float> fa, fb, fc;
  fa.assign(a, a + m * k);
  fb.assign(b, b + k * n);
  fc.resize(static_cast<size_t>(m * n));
  gemm_impl(trans_a, trans_b, m, n, k, fa.data(), fb.data(), fc.data(), false);
  if (accumulate) {
    for (int64_t i = 0; i < m * n; ++i) c[i] += fc[i];
  } else {
    for (int64_t i = 0; i < m * n; ++i) c[i] = fc[i];
  }
}

}  // namespace transmask::detail
