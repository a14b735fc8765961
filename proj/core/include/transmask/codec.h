// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

#include "transmask/audio_io.h"
#include "transmask/representation.h"
#include "transmask/tensor.h"

namespace transmask {

// Learnable analysis/synthesis filterbank.
struct CodecParams {
  Tensor encoder;  // [D_enc, 1, K]
  Tensor decoder;  // [D_enc, 1, K]
  int64_t stride = 8;

  int64_t kernel() const { return encoder.dim(2); }
  int64_t filters() const { return encoder.dim(0); }
};

// Smallest length >= n for which (length - kernel) is a multiple of stride.
int64_t padded_samples(int64_t n, int64_t kernel, int64_t stride);
int64_t frame_count(int64_t n, int64_t kernel, int64_t stride);

// wave[N] -> ReLU(conv1d) features[D_enc, L], tail zero-padded.
EncodedRep encode(const Tensor &wave, const CodecParams &params);
EncodedRep encode(const AudioBuffer &audio, const CodecParams &params);

// Transposed convolution back to a waveform truncated to the original length.
Tensor decode_tensor(const EncodedRep &rep, const CodecParams &params);
AudioBuffer decode(const EncodedRep &rep, const CodecParams &params,
                   int sample_rate);

}  // namespace transmask
