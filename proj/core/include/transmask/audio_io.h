// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace transmask {

inline constexpr int kDefaultSampleRate = 8000;

// Mono waveform. Samples are nominally in [-1, 1]; they are clamped on write.
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  int64_t frames() const { return static_cast<int64_t>(samples.size()); }
  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads RIFF/WAVE with 16-bit integer PCM or 32-bit IEEE float payloads
// (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel input is averaged to mono.
// Throws ParseError (with byte offset) on malformed headers,
// UnsupportedFormatError for other codecs, IoError when unreadable.
AudioBuffer read_wav(const std::string &path);

void write_wav(const AudioBuffer &buffer, const std::string &path,
               WavEncoding encoding = WavEncoding::kFloat32);

// Tiles the samples k times.
AudioBuffer repeat(const AudioBuffer &buffer, int k);

}  // namespace transmask
