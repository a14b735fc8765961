// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "transmask/errors.h"

namespace transmask {

namespace {

constexpr char kMagic[] = "TRANSMASK-CKPT\n";
constexpr size_t kMagicLen = sizeof(kMagic) - 1;

using nlohmann::json;

void put_f32(std::string &out, double v) {
  const float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f32(const unsigned char *p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(p[i]) << (8 * i);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

void save_checkpoint(const std::string &path, const ModelParams &params) {
  ModelParams view = params;  // shares tensor storage
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  json cfg = json::object();
  for (const auto &[k, v] : config_entries(params.config)) cfg[k] = v;
  manifest["config"] = cfg;
  json tensors = json::array();
  std::string payload;
  for_each_parameter(view, [&](const std::string &name, Tensor &t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
    for (double v : t.data()) put_f32(payload, v);
  });
  manifest["tensors"] = tensors;
  manifest["payload_bytes"] = payload.size();
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kMagic << text.size() << '\n' << text;
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

ModelParams load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

  if (bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw ParseError("not a checkpoint file (bad magic)", 0);
  }
  const size_t nl = bytes.find('\n', kMagicLen);
  if (nl == std::string::npos) {
    throw ParseError("missing manifest length", kMagicLen);
  }
  size_t manifest_len = 0;
  try {
    manifest_len = std::stoull(bytes.substr(kMagicLen, nl - kMagicLen));
  } catch (const std::exception &) {
    throw ParseError("malformed manifest length", kMagicLen);
  }
  const size_t manifest_at = nl + 1;
  if (bytes.size() - manifest_at < manifest_len) {
    throw ParseError("manifest truncated", bytes.size());
  }
  json manifest;
  try {
    manifest = json::parse(bytes.substr(manifest_at, manifest_len));
  } catch (const json::exception &e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(),
                     manifest_at);
  }

  const size_t payload_at = manifest_at + manifest_len;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw UnsupportedFormatError(
          "checkpoint format version " + std::to_string(version) +
          " is not supported (expected " +
          std::to_string(kCheckpointVersion) + ")");
    }
    ModelConfig config;
    for (const auto &[k, v] : manifest.at("config").items()) {
      if (!set_config_entry(config, k, v.get<std::string>())) {
        throw ParseError("unknown config key '" + k + "' in manifest",
                         manifest_at);
      }
    }
    ModelParams params = init_model(config, 0);

    const json &tensors = manifest.at("tensors");
    const size_t declared = manifest.at("payload_bytes").get<size_t>();
    const size_t present = bytes.size() - payload_at;
    if (present != declared) {
      throw ParseError("checkpoint payload " +
                           std::string(present < declared ? "truncated" : "oversized") +
                           ": expected " + std::to_string(declared) +
                           " bytes, found " + std::to_string(present),
                       bytes.size());
    }
    size_t index = 0, offset = payload_at;
    const auto *raw = reinterpret_cast<const unsigned char *>(bytes.data());
    for_each_parameter(params, [&](const std::string &name, Tensor &t) {
      if (index >= tensors.size()) {
        throw ParseError("manifest lists fewer tensors than the model has",
                         manifest_at);
      }
      const json &entry = tensors[index++];
      if (entry.at("name").get<std::string>() != name ||
          entry.at("shape").get<Shape>() != t.shape()) {
        throw ParseError("manifest tensor " + entry.dump() +
                             " does not match model tensor " + name + " " +
                             shape_str(t.shape()),
                         manifest_at);
      }
      const size_t need = static_cast<size_t>(t.numel()) * 4;
      if (offset + need > bytes.size()) {
        throw ParseError("payload shorter than manifest sizes", bytes.size());
      }
      auto data = t.mutable_data();
      for (size_t i = 0; i < data.size(); ++i) data[i] = get_f32(raw + offset + 4 * i);
      offset += need;
    });
    if (index != tensors.size() || offset != bytes.size()) {
      throw ParseError("payload length does not equal the sum of manifest sizes",
                       offset);
    }
    return params;
  } catch (const json::exception &e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(),
                     manifest_at);
  }
}

ModelParams load_checkpoint(const std::string &path,
                            const ModelConfig &expected) {
  ModelParams params = load_checkpoint(path);
  if (!(params.config == expected)) {
    const auto stored = config_entries(params.config);
    const auto wanted = config_entries(expected);
    for (size_t i = 0; i < stored.size(); ++i) {
      if (stored[i].second != wanted[i].second) {
        throw ConfigError("checkpoint config mismatch: " + stored[i].first +
                          " is " + stored[i].second + ", expected " +
                          wanted[i].second);
      }
    }
  }
  return params;
}

}  // namespace transmask
