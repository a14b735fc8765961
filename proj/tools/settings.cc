// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "settings.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "transmask/errors.h"

namespace transmask::cli {
namespace {

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string &key, const std::string &value) {
  double out = 0.0;
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError("setting '" + key + "': '" + value +
                      "' is not a finite number");
  }
  return out;
}

uint64_t parse_u64(const std::string &key, const std::string &value) {
  uint64_t out = 0;
  const char *end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("setting '" + key + "': '" + value +
                      "' is not an unsigned integer");
  }
  return out;
}

int parse_int(const std::string &key, const std::string &value) {
  const int64_t v = parse_int_value(key, value);
  if (v < INT32_MIN || v > INT32_MAX) {
    throw ConfigError("setting '" + key + "' out of range");
  }
  return static_cast<int>(v);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool apply_setting(Settings &s, const std::string &key,
                   const std::string &value) {
  TrainOptions &t = s.train;
  SyntheticMixSpec &d = t.data;
  if (key == "sample_rate") {
    const int rate = parse_int(key, value);
    t.config.sample_rate = rate;
    d.sample_rate = rate;
    return true;
  }
  if (set_config_entry(t.config, key, value)) return true;

  if (key == "data_seed") d.seed = parse_u64(key, value);
  else if (key == "n_train") d.n_train = parse_int_value(key, value);
  else if (key == "n_valid") d.n_valid = parse_int_value(key, value);
  else if (key == "duration") d.duration = parse_double(key, value);
  else if (key == "low_band_min") d.low_band_min = parse_double(key, value);
  else if (key == "low_band_max") d.low_band_max = parse_double(key, value);
  else if (key == "high_band_min") d.high_band_min = parse_double(key, value);
  else if (key == "high_band_max") d.high_band_max = parse_double(key, value);
  else if (key == "min_tones") d.min_tones = parse_int(key, value);
  else if (key == "max_tones") d.max_tones = parse_int(key, value);
  else if (key == "min_amplitude") d.min_amplitude = parse_double(key, value);
  else if (key == "max_amplitude") d.max_amplitude = parse_double(key, value);
  else if (key == "peak") d.peak = parse_double(key, value);
  else if (key == "epochs") t.epochs = parse_int(key, value);
  else if (key == "lr") t.lr = parse_double(key, value);
  else if (key == "clip_norm") t.clip_norm = parse_double(key, value);
  else if (key == "workers") t.workers = parse_int(key, value);
  else if (key == "seed") t.seed = parse_u64(key, value);
  else if (key == "target_si_snri") {
    if (value == "none") {
      t.target_si_snri.reset();
    } else {
      t.target_si_snri = parse_double(key, value);
    }
  } else {
    return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> settings_entries(
    const Settings &s) {
  const TrainOptions &t = s.train;
  const SyntheticMixSpec &d = t.data;
  auto entries = config_entries(t.config);
  auto add = [&](const char *k, std::string v) { entries.emplace_back(k, v); };
  add("data_seed", std::to_string(d.seed));
  add("n_train", std::to_string(d.n_train));
  add("n_valid", std::to_string(d.n_valid));
  add("duration", format_double(d.duration));
  add("low_band_min", format_double(d.low_band_min));
  add("low_band_max", format_double(d.low_band_max));
  add("high_band_min", format_double(d.high_band_min));
  add("high_band_max", format_double(d.high_band_max));
  add("min_tones", std::to_string(d.min_tones));
  add("max_tones", std::to_string(d.max_tones));
  add("min_amplitude", format_double(d.min_amplitude));
  add("max_amplitude", format_double(d.max_amplitude));
  add("peak", format_double(d.peak));
  add("epochs", std::to_string(t.epochs));
  add("lr", format_double(t.lr));
  add("clip_norm", format_double(t.clip_norm));
  add("seed", std::to_string(t.seed));
  add("target_si_snri",
      t.target_si_snri ? format_double(*t.target_si_snri) : "none");
  add("workers", std::to_string(t.workers));
  return entries;
}

Settings parse_settings(std::istream &in, const std::string &origin) {
  Settings s;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(where + ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    try {
      if (!apply_setting(s, key, value)) {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError &e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return s;
}

Settings load_settings(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_settings(in, path);
}

uint64_t resolve_seed(std::optional<uint64_t> flag, uint64_t fallback) {
  if (flag) return *flag;
  if (const char *env = std::getenv("TRANSMASK_SEED"); env && *env) {
    return parse_u64("TRANSMASK_SEED", env);
  }
  return fallback;
}

}  // namespace transmask::cli
