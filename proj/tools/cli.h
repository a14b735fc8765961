// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <ostream>

namespace transmask::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;      // usage, I/O and configuration
inline constexpr int kExitNumerical = 2;  // divergence, gradcheck failure

// Entry point of the `transmask` executable. Machine-readable results go to
// `out`, diagnostics to `err`.
int run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err);

}  // namespace transmask::cli
