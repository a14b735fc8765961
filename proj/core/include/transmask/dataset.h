// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "transmask/audio_io.h"
#include "transmask/tensor.h"

namespace transmask {

// Two spectrally disjoint tone families mixed per item.
struct SyntheticMixSpec {
  uint64_t seed = 0;
  int64_t n_train = 64;
  int64_t n_valid = 16;
  double duration = 2.0;  // seconds
  int sample_rate = kDefaultSampleRate;

  // Family bands in Hz.
  double low_band_min = 100.0, low_band_max = 900.0;
  double high_band_min = 1100.0, high_band_max = 1900.0;
  int min_tones = 2, max_tones = 4;
  double min_amplitude = 0.3, max_amplitude = 1.0;
  double peak = 0.7;

  int64_t samples() const;
};

struct MixItem {
  AudioBuffer mixture;  // clipped to [-1, 1]
  Tensor references;    // [2, N]: low family, high family
};

// Item `index` of the global stream; train item k is index 2k, validation
// item k is index 2k + 1.
MixItem generate_item(const SyntheticMixSpec &spec, int64_t index);

struct Dataset {
  std::vector<MixItem> train;
  std::vector<MixItem> valid;
};

Dataset generate_dataset(const SyntheticMixSpec &spec);

// Mixture as a 1-D tensor.
Tensor mixture_tensor(const MixItem &item);

}  // namespace transmask
