// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>

namespace transmask {

// Splits [0, n) into at most `workers` contiguous ranges and runs `fn` on each
// range in its own thread (the calling thread takes the first range). The
// graph-recording mode of the caller is propagated to the workers. The first
// exception thrown by any range is rethrown after all ranges finish.
void parallel_ranges(int workers, int64_t n,
                     const std::function<void(int, int64_t, int64_t)> &fn);

}  // namespace transmask
