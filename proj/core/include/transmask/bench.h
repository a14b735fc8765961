// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "transmask/audio_io.h"
#include "transmask/model.h"

namespace transmask {

inline constexpr const char *kBenchCsvHeader =
    "model,mult,audio_s,wall_s,rtf,seq_steps,workers";

// Longest chain of ordered recurrence steps in one forward pass over
// `frames` encoded frames: n_layers * 2P for STRNN, n_layers * (2P + S) for
// the baseline.
int64_t count_sequential_steps(const ModelConfig &config, int64_t frames);

struct BenchRow {
  std::string model;
  int mult = 1;
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;  // median over repetitions
  double rtf = 0.0;
  int64_t sequential_steps = 0;
  int workers = 1;
  bool failed = false;
  std::string error;
};

struct BenchOptions {
  std::vector<int> mults = {1, 2, 4, 8};
  int workers = 1;
  int repetitions = 5;
};

struct BenchModel {
  std::string name;
  ModelParams params;
};

// For every model and multiplier: repeat the audio, run one discarded
// warm-up pass, then time `repetitions` separations. A row whose run throws
// (for example out of memory) is marked failed and the sweep continues.
// Throws ContractError if the instrumented step tally ever disagrees with
// count_sequential_steps.
std::vector<BenchRow> run_bench(const std::vector<BenchModel> &models,
                                const AudioBuffer &audio,
                                const BenchOptions &options);

// Header plus one line per row; failed rows carry nan timings.
void write_bench_csv(std::ostream &out, const std::vector<BenchRow> &rows);

}  // namespace transmask
