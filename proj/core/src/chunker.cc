// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/chunker.h"

#include <algorithm>

#include "transmask/errors.h"
#include "transmask/ops.h"

namespace transmask {

ChunkGeometry chunk_geometry(int64_t frames, int64_t hop) {
  if (hop < 1) throw ContractError("chunk hop must be >= 1");
  if (frames < 1) throw ContractError("cannot segment an empty sequence");
  const int64_t target = std::max(frames, 2 * hop);
  const int64_t padded = (target + hop - 1) / hop * hop;
  return {padded, padded / hop - 1};
}

ChunkedRep segment(const EncodedRep &rep, int64_t hop) {
  const Tensor &x = rep.features;
  if (x.rank() != 2) {
    throw DimensionError("segment expects features[D, L], got " +
                         shape_str(x.shape()));
  }
  const int64_t d = x.dim(0), len = x.dim(1);
  const ChunkGeometry geo = chunk_geometry(len, hop);
  const int64_t size = 2 * hop, s_count = geo.num_chunks;

  auto xd = x.data();
  std::vector<double> out(static_cast<size_t>(d * size * s_count), 0.0);
  for (int64_t c = 0; c < d; ++c) {
    for (int64_t j = 0; j < size; ++j) {
      for (int64_t s = 0; s < s_count; ++s) {
        const int64_t f = s * hop + j;
        if (f < len) out[(c * size + j) * s_count + s] = xd[c * len + f];
      }
    }
  }
  Tensor chunks = make_result(
      {d, size, s_count}, std::move(out), {x},
      [x, d, len, size, s_count, hop](TensorImpl &self) {
        auto g = x.impl()->grad_buffer();
        for (int64_t c = 0; c < d; ++c) {
          for (int64_t j = 0; j < size; ++j) {
            for (int64_t s = 0; s < s_count; ++s) {
              const int64_t f = s * hop + j;
              if (f < len) {
                g[c * len + f] += self.grad[(c * size + j) * s_count + s];
              }
            }
          }
        }
      });

  ChunkedRep result;
  result.chunks = std::move(chunks);
  result.hop = hop;
  result.original_frames = len;
  result.original_samples = rep.original_samples;
  result.kernel = rep.kernel;
  result.stride = rep.stride;
  return result;
}

EncodedRep overlap_add(const ChunkedRep &rep) {
  const Tensor &x = rep.chunks;
  if (x.rank() != 3 || rep.hop < 1 || x.dim(1) != 2 * rep.hop) {
    throw ContractError("overlap_add: chunk tensor " + shape_str(x.shape()) +
                        " inconsistent with hop " + std::to_string(rep.hop));
  }
  const int64_t d = x.dim(0), size = x.dim(1), s_count = x.dim(2);
  const int64_t hop = rep.hop, len = rep.original_frames;
  const ChunkGeometry geo = chunk_geometry(std::max<int64_t>(len, 1), hop);
  if (len < 1 || geo.num_chunks != s_count) {
    throw ContractError("overlap_add: recorded length " + std::to_string(len) +
                        " does not yield " + std::to_string(s_count) +
                        " chunks of hop " + std::to_string(hop));
  }
  // Frame f is covered by chunks floor(f/P)-1 and floor(f/P) when valid.
  auto coverage = [hop, s_count](int64_t f) {
    const int64_t b = f / hop;
    return static_cast<double>((b - 1 >= 0 ? 1 : 0) + (b < s_count ? 1 : 0));
  };
  auto xd = x.data();
  std::vector<double> out(static_cast<size_t>(d * len), 0.0);
  for (int64_t c = 0; c < d; ++c) {
    for (int64_t j = 0; j < size; ++j) {
      for (int64_t s = 0; s < s_count; ++s) {
        const int64_t f = s * hop + j;
        if (f < len) out[c * len + f] += xd[(c * size + j) * s_count + s];
      }
    }
    for (int64_t f = 0; f < len; ++f) out[c * len + f] /= coverage(f);
  }
  EncodedRep result;
  result.features = make_result(
      {d, len}, std::move(out), {x},
      [x, d, len, size, s_count, hop, coverage](TensorImpl &self) {
        auto g = x.impl()->grad_buffer();
        for (int64_t c = 0; c < d; ++c) {
          for (int64_t j = 0; j < size; ++j) {
            for (int64_t s = 0; s < s_count; ++s) {
              const int64_t f = s * hop + j;
              if (f < len) {
                g[(c * size + j) * s_count + s] +=
                    self.grad[c * len + f] / coverage(f);
              }
            }
          }
        }
      });
  result.original_samples = rep.original_samples;
  result.kernel = rep.kernel;
  result.stride = rep.stride;
  return result;
}

}  // namespace transmask
