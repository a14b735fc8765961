// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "transmask/audio_io.h"
#include "transmask/model.h"

namespace transmask {

// encode -> separate -> apply_masks -> decode. mixture[N] -> estimates[n, N].
Tensor separate_waveform(const Tensor &mixture, const ModelParams &params,
                         int workers = 1);

// Inference on audio; one buffer per speaker, each of the input's length.
// Throws ConfigError when the sample rate differs from the model's.
std::vector<AudioBuffer> separate_audio(const AudioBuffer &mixture,
                                        const ModelParams &params,
                                        int workers = 1);

}  // namespace transmask
