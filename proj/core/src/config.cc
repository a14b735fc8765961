// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/config.h"

#include <charconv>

#include "transmask/errors.h"

namespace transmask {

std::string to_string(SeparatorKind kind) {
  return kind == SeparatorKind::kStrnn ? "strnn" : "dprnn_baseline";
}

SeparatorKind parse_separator_kind(const std::string &name) {
  if (name == "strnn") return SeparatorKind::kStrnn;
  if (name == "dprnn_baseline" || name == "dprnn") {
    return SeparatorKind::kDprnnBaseline;
  }
  throw ConfigError("unknown separator kind '" + name +
                    "' (expected strnn or dprnn_baseline)");
}

void ModelConfig::validate() const {
  auto positive = [](int64_t v, const char *name) {
    if (v <= 0) {
      throw ConfigError(std::string(name) + " must be positive, got " +
                        std::to_string(v));
    }
  };
  positive(d_model, "d_model");
  positive(lstm_hidden, "lstm_hidden");
  positive(n_heads, "n_heads");
  positive(d_ffn, "d_ffn");
  positive(n_layers, "n_layers");
  positive(chunk_hop, "chunk_hop");
  positive(enc_filters, "enc_filters");
  positive(enc_kernel, "enc_kernel");
  positive(enc_stride, "enc_stride");
  positive(dte_blocks, "dte_blocks");
  positive(dte_kernel, "dte_kernel");
  positive(sample_rate, "sample_rate");
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (n_speakers < 2 || n_speakers > 4) {
    throw ConfigError("n_speakers must be in [2, 4], got " +
                      std::to_string(n_speakers));
  }
  if (enc_filters != d_model) {
    throw ConfigError("enc_filters (" + std::to_string(enc_filters) +
                      ") must equal d_model (" + std::to_string(d_model) +
                      "); the separator has no bottleneck projection");
  }
  if (dte_kernel % 2 == 0) {
    throw ConfigError("dte_kernel must be odd to preserve chunk geometry");
  }
}

ModelConfig transmask_config(int64_t n_layers) {
  ModelConfig c;
  c.n_layers = n_layers;
  return c;
}

ModelConfig dprnn_baseline_config(const ModelConfig &like) {
  ModelConfig c = like;
  c.separator = SeparatorKind::kDprnnBaseline;
  return c;
}

namespace {

struct IntField {
  const char *key;
  int64_t ModelConfig::*member;
};

constexpr IntField kIntFields[] = {
    {"d_model", &ModelConfig::d_model},
    {"lstm_hidden", &ModelConfig::lstm_hidden},
    {"n_heads", &ModelConfig::n_heads},
    {"d_ffn", &ModelConfig::d_ffn},
    {"n_layers", &ModelConfig::n_layers},
    {"n_speakers", &ModelConfig::n_speakers},
    {"chunk_hop", &ModelConfig::chunk_hop},
    {"enc_filters", &ModelConfig::enc_filters},
    {"enc_kernel", &ModelConfig::enc_kernel},
    {"enc_stride", &ModelConfig::enc_stride},
    {"dte_blocks", &ModelConfig::dte_blocks},
    {"dte_kernel", &ModelConfig::dte_kernel},
};

}  // namespace

int64_t parse_int_value(const std::string &key, const std::string &value) {
  int64_t out = 0;
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError("value '" + value + "' for key '" + key +
                      "' is not an integer");
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> config_entries(
    const ModelConfig &config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const IntField &f : kIntFields) {
    out.emplace_back(f.key, std::to_string(config.*f.member));
  }
  out.emplace_back("separator", to_string(config.separator));
  out.emplace_back("sample_rate", std::to_string(config.sample_rate));
  return out;
}

bool set_config_entry(ModelConfig &config, const std::string &key,
                      const std::string &value) {
  for (const IntField &f : kIntFields) {
    if (key == f.key) {
      config.*f.member = parse_int_value(key, value);
      return true;
    }
  }
  if (key == "separator") {
    config.separator = parse_separator_kind(value);
    return true;
  }
  if (key == "sample_rate") {
    config.sample_rate = static_cast<int>(parse_int_value(key, value));
    return true;
  }
  return false;
}

}  // namespace transmask
