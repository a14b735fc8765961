// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "transmask/model.h"

namespace transmask {

inline constexpr int kCheckpointVersion = 1;

// File layout:
//   "TRANSMASK-CKPT\n"
//   decimal manifest byte count, "\n"
//   JSON manifest {format_version, config, tensors: [{name, shape}],
//                  payload_bytes}
//   payload: little-endian float32 values of every tensor in manifest order.
void save_checkpoint(const std::string &path, const ModelParams &params);

// Throws IoError when unreadable, ParseError on malformed or truncated
// content, UnsupportedFormatError on a version mismatch.
ModelParams load_checkpoint(const std::string &path);
// As above; additionally throws ConfigError when the stored config differs
// from `expected`.
ModelParams load_checkpoint(const std::string &path,
                            const ModelConfig &expected);

}  // namespace transmask
