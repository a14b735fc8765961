// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "transmask/dataset.h"
#include "transmask/model.h"
#include "transmask/optim.h"

namespace transmask {

struct TrainOptions {
  ModelConfig config;
  SyntheticMixSpec data;
  int epochs = 30;
  double lr = 1e-3;
  double clip_norm = 5.0;
  uint64_t seed = 0;  // parameter init and per-epoch shuffling
  // Stop after the first epoch whose validation SI-SNRi reaches this value.
  std::optional<double> target_si_snri;
  int workers = 1;  // validation inference only
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;     // mean uPIT loss over the epoch's steps
  double valid_si_snri = 0.0;  // dB
  double wall_seconds = 0.0;   // this epoch, including validation
};

// One JSON object, no trailing newline.
std::string to_json_line(const EpochRecord &record);

struct TrainResult {
  ModelParams best;  // parameters at the best validation epoch
  int best_epoch = 0;
  double best_valid_si_snri = 0.0;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

// Generates the dataset from options.data and trains. Throws DivergenceError
// when a step produces a non-finite loss.
TrainResult train(const TrainOptions &options,
                  const EpochCallback &on_epoch = {});
TrainResult train(const TrainOptions &options, const Dataset &data,
                  const EpochCallback &on_epoch = {});

// Forward, uPIT loss, backward, clipping and one Adam update. Returns the
// loss before the update.
double train_step(ModelParams &params, const MixItem &item, AdamState &state,
                  const TrainOptions &options);

struct EvalResult {
  double loss = 0.0;     // mean uPIT loss
  double si_snri = 0.0;  // mean SI-SNRi, dB
};

EvalResult evaluate(const ModelParams &params, const std::vector<MixItem> &items,
                    int workers = 1);

}  // namespace transmask
