// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "transmask/audio_io.h"

namespace transmask {

enum class SeparatorKind { kStrnn, kDprnnBaseline };

std::string to_string(SeparatorKind kind);
SeparatorKind parse_separator_kind(const std::string &name);

// Every architectural hyperparameter. Defaults describe the 6-layer model.
struct ModelConfig {
  int64_t d_model = 64;       // separator / attention width
  int64_t lstm_hidden = 128;  // per direction
  int64_t n_heads = 4;
  int64_t d_ffn = 256;
  int64_t n_layers = 6;
  int64_t n_speakers = 2;
  int64_t chunk_hop = 64;     // P; chunks span 2P frames
  int64_t enc_filters = 64;   // D_enc
  int64_t enc_kernel = 16;
  int64_t enc_stride = 8;
  int64_t dte_blocks = 3;
  int64_t dte_kernel = 3;
  SeparatorKind separator = SeparatorKind::kStrnn;
  int sample_rate = kDefaultSampleRate;

  int64_t chunk_size() const { return 2 * chunk_hop; }

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  bool operator==(const ModelConfig &) const = default;
};

ModelConfig transmask_config(int64_t n_layers);

// Flat key=value view; keys are the field names above.
std::vector<std::pair<std::string, std::string>> config_entries(
    const ModelConfig &config);
// Returns false for an unknown key. Throws ConfigError for a malformed value.
bool set_config_entry(ModelConfig &config, const std::string &key,
                      const std::string &value);
// Strict base-10 integer parse of a whole string; ConfigError names `key`.
int64_t parse_int_value(const std::string &key, const std::string &value);
// DPRNN-style reference with the same widths as `like`.
ModelConfig dprnn_baseline_config(const ModelConfig &like);

}  // namespace transmask
