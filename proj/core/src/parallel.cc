// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/parallel.h"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "transmask/tensor.h"

namespace transmask {

void parallel_ranges(int workers, int64_t n,
                     const std::function<void(int, int64_t, int64_t)> &fn) {
  const int64_t parts = std::clamp<int64_t>(workers, 1, std::max<int64_t>(n, 1));
  if (parts == 1) {
    fn(0, 0, n);
    return;
  }
  const bool record = grad_enabled();
  std::vector<std::exception_ptr> errors(static_cast<size_t>(parts));
  auto run = [&](int part) {
    const int64_t begin = n * part / parts;
    const int64_t end = n * (part + 1) / parts;
    try {
      if (record) {
        fn(part, begin, end);
      } else {
        NoGradGuard no_grad;
        fn(part, begin, end);
      }
    } catch (...) {
      errors[static_cast<size_t>(part)] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(parts - 1));
  for (int p = 1; p < parts; ++p) threads.emplace_back(run, p);
  run(0);
  for (auto &t : threads) t.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace transmask
