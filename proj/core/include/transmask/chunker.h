// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

#include "transmask/representation.h"

namespace transmask {

struct ChunkGeometry {
  int64_t padded_frames = 0;  // L'
  int64_t num_chunks = 0;     // S
};

// L' is the smallest multiple of P that is >= max(L, 2P); S = L'/P - 1.
ChunkGeometry chunk_geometry(int64_t frames, int64_t hop);

// features[D, L] -> chunks[D, 2P, S], trailing zero padding only.
ChunkedRep segment(const EncodedRep &rep, int64_t hop);

// Inverse of segment: sums overlapping chunk frames, divides by the coverage
// count (1 or 2) and truncates to the recorded length.
EncodedRep overlap_add(const ChunkedRep &chunks);

}  // namespace transmask
