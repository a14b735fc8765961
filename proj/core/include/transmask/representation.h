// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

#include "transmask/tensor.h"

namespace transmask {

// Encoder output, features[D_enc, L]. The waveform bookkeeping lets the
// decoder restore the exact input length.
struct EncodedRep {
  Tensor features;
  int64_t original_samples = 0;
  int64_t kernel = 0;
  int64_t stride = 0;

  int64_t channels() const { return features.dim(0); }
  int64_t frames() const { return features.dim(1); }
};

// chunks[D, 2P, S]; chunk s covers padded frames [s*P, s*P + 2P).
struct ChunkedRep {
  Tensor chunks;
  int64_t hop = 0;             // P
  int64_t original_frames = 0;  // L before padding
  // Codec bookkeeping carried through so overlap_add can rebuild an
  // EncodedRep.
  int64_t original_samples = 0;
  int64_t kernel = 0;
  int64_t stride = 0;

  int64_t channels() const { return chunks.dim(0); }
  int64_t chunk_size() const { return chunks.dim(1); }
  int64_t num_chunks() const { return chunks.dim(2); }
  int64_t padded_frames() const { return (num_chunks() + 1) * hop; }

  ChunkedRep with_chunks(Tensor t) const {
    ChunkedRep out = *this;
    out.chunks = std::move(t);
    return out;
  }
};

}  // namespace transmask
