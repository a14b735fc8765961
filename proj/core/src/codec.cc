// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/codec.h"

#include "transmask/ops.h"

namespace transmask {

int64_t padded_samples(int64_t n, int64_t kernel, int64_t stride) {
  if (n < kernel) {
    throw InputTooShortError("audio of " + std::to_string(n) +
                             " samples is shorter than one encoder kernel (" +
                             std::to_string(kernel) + ")");
  }
  const int64_t rem = (n - kernel) % stride;
  return rem == 0 ? n : n + (stride - rem);
}

int64_t frame_count(int64_t n, int64_t kernel, int64_t stride) {
  return (padded_samples(n, kernel, stride) - kernel) / stride + 1;
}

EncodedRep encode(const Tensor &wave, const CodecParams &params) {
  if (wave.rank() != 1) {
    throw DimensionError("encode expects a 1-D waveform, got " +
                         shape_str(wave.shape()));
  }
  const int64_t n = wave.dim(0);
  const int64_t k = params.kernel();
  const int64_t padded = padded_samples(n, k, params.stride);
  Tensor x = pad(reshape(wave, {1, n}), 1, 0, padded - n);
  EncodedRep rep;
  rep.features = relu(conv1d(x, params.encoder, params.stride));
  rep.original_samples = n;
  rep.kernel = k;
  rep.stride = params.stride;
  return rep;
}

EncodedRep encode(const AudioBuffer &audio, const CodecParams &params) {
  std::vector<double> v(audio.samples.begin(), audio.samples.end());
  if (v.empty()) throw InputTooShortError("empty audio buffer");
  return encode(Tensor::from({audio.frames()}, std::move(v)), params);
}

Tensor decode_tensor(const EncodedRep &rep, const CodecParams &params) {
  if (rep.features.rank() != 2 ||
      rep.features.dim(0) != params.decoder.dim(0)) {
    throw DimensionError("decode: features " +
                         shape_str(rep.features.shape()) +
                         " do not match decoder " +
                         shape_str(params.decoder.shape()));
  }
  Tensor y = conv_transpose1d(rep.features, params.decoder, params.stride);
  if (y.dim(1) < rep.original_samples) {
    throw ContractError("decoded length " + std::to_string(y.dim(1)) +
                        " shorter than original " +
                        std::to_string(rep.original_samples));
  }
  return reshape(narrow(y, 1, 0, rep.original_samples),
                 {rep.original_samples});
}

AudioBuffer decode(const EncodedRep &rep, const CodecParams &params,
                   int sample_rate) {
  Tensor y = decode_tensor(rep, params);
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(y.data().begin(), y.data().end());
  return out;
}

}  // namespace transmask
