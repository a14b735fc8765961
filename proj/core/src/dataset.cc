// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/dataset.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "transmask/errors.h"
#include "transmask/random.h"

namespace transmask {

namespace {

std::vector<double> tone_family(const SyntheticMixSpec &spec, Rng &rng,
                                double f_min, double f_max) {
  const int64_t n = spec.samples();
  const int tones = static_cast<int>(rng.randint(spec.min_tones, spec.max_tones));
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int t = 0; t < tones; ++t) {
    const double freq = rng.uniform(f_min, f_max);
    const double amp = rng.uniform(spec.min_amplitude, spec.max_amplitude);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double w = 2.0 * std::numbers::pi * freq / spec.sample_rate;
    for (int64_t i = 0; i < n; ++i) {
      out[static_cast<size_t>(i)] += amp * std::sin(w * static_cast<double>(i) + phase);
    }
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double &v : out) v *= spec.peak / peak;
  }
  // Stored as float so references match what a WAV round trip would hold.
  for (double &v : out) v = static_cast<float>(v);
  return out;
}

}  // namespace

int64_t SyntheticMixSpec::samples() const {
  return static_cast<int64_t>(std::llround(duration * sample_rate));
}

MixItem generate_item(const SyntheticMixSpec &spec, int64_t index) {
  if (spec.sample_rate <= 0 || spec.samples() < 1) {
    throw ConfigError("synthetic items need a positive duration and rate");
  }
  if (spec.low_band_max >= spec.high_band_min) {
    throw ConfigError("tone families must be spectrally disjoint");
  }
  Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(index)));
  std::vector<double> a =
      tone_family(spec, rng, spec.low_band_min, spec.low_band_max);
  std::vector<double> b =
      tone_family(spec, rng, spec.high_band_min, spec.high_band_max);
  const int64_t n = spec.samples();
  MixItem item;
  item.mixture.sample_rate = spec.sample_rate;
  item.mixture.samples.resize(static_cast<size_t>(n));
  for (size_t i = 0; i < a.size(); ++i) {
    item.mixture.samples[i] =
        static_cast<float>(std::clamp(a[i] + b[i], -1.0, 1.0));
  }
  std::vector<double> refs = a;
  refs.insert(refs.end(), b.begin(), b.end());
  item.references = Tensor::from({2, n}, std::move(refs));
  return item;
}

Dataset generate_dataset(const SyntheticMixSpec &spec) {
  Dataset d;
  for (int64_t k = 0; k < spec.n_train; ++k) {
    d.train.push_back(generate_item(spec, 2 * k));
  }
  for (int64_t k = 0; k < spec.n_valid; ++k) {
    d.valid.push_back(generate_item(spec, 2 * k + 1));
  }
  return d;
}

Tensor mixture_tensor(const MixItem &item) {
  std::vector<double> v(item.mixture.samples.begin(),
                        item.mixture.samples.end());
  return Tensor::from({item.mixture.frames()}, std::move(v));
}

}  // namespace transmask
