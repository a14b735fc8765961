// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

namespace transmask::detail {

// Row-major C[m,n] = op(A)[m,k] * op(B)[k,n], or C += ... when accumulate.
// op(A) = A^T when trans_a (A is then stored [k,m]); likewise for B.
// Runs in single precision when the global mode is kFloat32.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double *a, const double *b, double *c, bool accumulate);

}  // namespace transmask::detail
