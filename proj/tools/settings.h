// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "transmask/trainer.h"

namespace transmask::cli {

// Flat key=value settings. Blank lines and text after '#' are ignored.
// Keys cover ModelConfig, SyntheticMixSpec (dataset keys carry their own
// names, the generator seed is `data_seed`) and the trainer
// hyperparameters. `sample_rate` applies to both the model and the data.
struct Settings {
  TrainOptions train;
};

// Throws ConfigError naming the line for malformed lines, unknown or
// duplicated keys and unparsable values.
Settings parse_settings(std::istream &in, const std::string &origin);
Settings load_settings(const std::string &path);

// Applies one key; false if the key is unknown.
bool apply_setting(Settings &settings, const std::string &key,
                   const std::string &value);

// Every key with its current value, in file order.
std::vector<std::pair<std::string, std::string>> settings_entries(
    const Settings &settings);

// Seed precedence: explicit flag, then TRANSMASK_SEED, then `fallback`.
// Throws ConfigError when the environment value is not an unsigned integer.
uint64_t resolve_seed(std::optional<uint64_t> flag, uint64_t fallback);

}  // namespace transmask::cli
