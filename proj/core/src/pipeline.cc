// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/pipeline.h"

#include "transmask/codec.h"
#include "transmask/errors.h"
#include "transmask/ops.h"
#include "transmask/separator.h"

namespace transmask {

Tensor separate_waveform(const Tensor &mixture, const ModelParams &params,
                         int workers) {
  EncodedRep rep = encode(mixture, params.codec);
  MaskSet masks = separate(rep, params, workers);
  std::vector<Tensor> outs;
  for (const EncodedRep &r : apply_masks(rep, masks)) {
    outs.push_back(decode_tensor(r, params.codec));
  }
  return stack(outs);
}

std::vector<AudioBuffer> separate_audio(const AudioBuffer &mixture,
                                        const ModelParams &params,
                                        int workers) {
  if (mixture.sample_rate != params.config.sample_rate) {
    throw ConfigError("input sample rate " +
                      std::to_string(mixture.sample_rate) +
                      " Hz does not match the model's " +
                      std::to_string(params.config.sample_rate) +
                      " Hz; resample the input first");
  }
  if (mixture.samples.empty()) throw InputTooShortError("empty audio buffer");
  std::vector<double> v(mixture.samples.begin(), mixture.samples.end());
  NoGradGuard no_grad;
  Tensor est = separate_waveform(Tensor::from({mixture.frames()}, std::move(v)),
                                 params, workers);
  std::vector<AudioBuffer> out;
  for (int64_t s = 0; s < est.dim(0); ++s) {
    AudioBuffer b;
    b.sample_rate = mixture.sample_rate;
    Tensor row = select(est, s);
    b.samples.assign(row.data().begin(), row.data().end());
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace transmask
