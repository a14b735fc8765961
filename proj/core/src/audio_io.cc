// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "transmask/errors.h"

namespace transmask {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

  size_t size() const { return bytes_.size(); }
  size_t pos() const { return pos_; }
  void seek(size_t p) { pos_ = p; }
  bool has(size_t n) const { return pos_ + n <= bytes_.size(); }

  void need(size_t n, const char *what) const {
    if (!has(n)) {
      throw ParseError(std::string("truncated ") + what,
                       static_cast<int64_t>(pos_));
    }
  }
  std::string tag() {
    need(4, "chunk tag");
    std::string s(reinterpret_cast<const char *>(&bytes_[pos_]), 4);
    pos_ += 4;
    return s;
  }
  uint16_t u16() {
    need(2, "16-bit field");
    const uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4, "32-bit field");
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  const uint8_t *at(size_t p) const { return bytes_.data() + p; }

 private:
  std::vector<uint8_t> bytes_;
  size_t pos_ = 0;
};

void put_u16(std::vector<uint8_t> &out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t> &out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<uint8_t> &out, const char *tag) {
  out.insert(out.end(), tag, tag + 4);
}

int16_t read_i16(const uint8_t *p) {
  return static_cast<int16_t>(static_cast<uint16_t>(p[0] | (p[1] << 8)));
}

float read_f32(const uint8_t *p) {
  uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<float>(bits);
}

}  // namespace

AudioBuffer read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  ByteReader r(std::move(bytes));

  if (r.tag() != "RIFF") throw ParseError("missing RIFF signature", 0);
  r.u32();  // riff size; trust the chunk walk instead
  if (r.tag() != "WAVE") throw ParseError("missing WAVE form type", 8);

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  uint32_t sample_rate = 0;
  size_t fmt_offset = 0;
  size_t data_pos = 0, data_size = 0;
  bool have_data = false;

  while (r.has(8)) {
    const size_t chunk_start = r.pos();
    const std::string id = r.tag();
    const uint32_t size = r.u32();
    const size_t body = r.pos();
    if (id == "fmt ") {
      if (size < 16) {
        throw ParseError("fmt chunk shorter than 16 bytes",
                         static_cast<int64_t>(chunk_start));
      }
      r.need(size, "fmt chunk");
      fmt_offset = body;
      format = r.u16();
      channels = r.u16();
      sample_rate = r.u32();
      r.u32();  // byte rate
      block_align = r.u16();
      bits = r.u16();
      if (format == kFormatExtensible) {
        if (size < 40) {
          throw ParseError("extensible fmt chunk shorter than 40 bytes",
                           static_cast<int64_t>(chunk_start));
        }
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_size = std::min<size_t>(size, r.size() - body);
      have_data = true;
    }
    r.seek(body + size + (size & 1u));
    if (have_data && have_fmt) break;
  }

  if (!have_fmt) {
    throw ParseError("no fmt chunk before end of file",
                     static_cast<int64_t>(r.size()));
  }
  if (!have_data) {
    throw ParseError("no data chunk before end of file",
                     static_cast<int64_t>(r.size()));
  }
  if (channels == 0 || sample_rate == 0) {
    throw ParseError("fmt chunk declares zero channels or sample rate",
                     static_cast<int64_t>(fmt_offset));
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw UnsupportedFormatError(
        "unsupported WAV encoding: format tag " + std::to_string(format) +
        " with " + std::to_string(bits) + " bits per sample in " + path);
  }
  const size_t bytes_per_sample = bits / 8;
  if (block_align != channels * bytes_per_sample) {
    throw ParseError("block align inconsistent with channels and bit depth",
                     static_cast<int64_t>(fmt_offset + 12));
  }
  const size_t frames = data_size / block_align;
  if (frames == 0) {
    throw ParseError("data chunk holds no complete frame",
                     static_cast<int64_t>(data_pos));
  }

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    const uint8_t *frame = r.at(data_pos + f * block_align);
    if (channels == 1) {
      out.samples[f] = pcm16 ? static_cast<float>(read_i16(frame) / 32768.0)
                             : read_f32(frame);
      continue;
    }
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t *p = frame + c * bytes_per_sample;
      acc += pcm16 ? read_i16(p) / 32768.0 : static_cast<double>(read_f32(p));
    }
    out.samples[f] = static_cast<float>(acc / channels);
  }
  return out;
}

void write_wav(const AudioBuffer &buffer, const std::string &path,
               WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t data_bytes =
      static_cast<uint32_t>(buffer.samples.size() * (bits / 8));
  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<uint32_t>(buffer.sample_rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : buffer.samples) {
    const float v = std::clamp(s, -1.0f, 1.0f);
    if (pcm16) {
      const long q = std::lround(static_cast<double>(v) * 32768.0);
      put_u16(out, static_cast<uint16_t>(
                       static_cast<int16_t>(std::clamp(q, -32768L, 32767L))));
    } else {
      put_u32(out, std::bit_cast<uint32_t>(v));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char *>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path);
}

AudioBuffer repeat(const AudioBuffer &buffer, int k) {
  if (k < 1) throw ContractError("repeat count must be positive");
  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  out.samples.reserve(buffer.samples.size() * static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.samples.insert(out.samples.end(), buffer.samples.begin(),
                       buffer.samples.end());
  }
  return out;
}

}  // namespace transmask
