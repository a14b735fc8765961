// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "transmask/errors.h"
#include "transmask/objective.h"
#include "transmask/pipeline.h"
#include "transmask/random.h"

namespace transmask {

namespace {

std::vector<Tensor> parameter_list(ModelParams &params) {
  std::vector<Tensor> out;
  for_each_parameter(params,
                     [&](const std::string &, Tensor &t) { out.push_back(t); });
  return out;
}

constexpr uint64_t kShuffleStream = 0x5f3759df;

}  // namespace

std::string to_json_line(const EpochRecord &r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["valid_si_snri"] = r.valid_si_snri;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump();
}

double train_step(ModelParams &params, const MixItem &item, AdamState &state,
                  const TrainOptions &options) {
  std::vector<Tensor> plist = parameter_list(params);
  for (Tensor &p : plist) p.zero_grad();
  Tensor est = separate_waveform(mixture_tensor(item), params);
  Tensor loss = upit_loss(est, item.references).loss;
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  backward(loss);
  std::vector<std::vector<double>> grads = collect_grads(plist);
  const double norm = clip_grad_norm(grads, options.clip_norm);
  if (!std::isfinite(norm)) return norm;
  AdamOptions adam;
  adam.lr = options.lr;
  adam_step(plist, grads, state, adam);
  return value;
}

EvalResult evaluate(const ModelParams &params, const std::vector<MixItem> &items,
                    int workers) {
  NoGradGuard no_grad;
  EvalResult r;
  if (items.empty()) return r;
  for (const MixItem &item : items) {
    Tensor mix = mixture_tensor(item);
    Tensor est = separate_waveform(mix, params, workers);
    r.loss += upit_loss(est, item.references).loss.item();
    r.si_snri += si_snr_improvement(est, item.references, mix);
  }
  r.loss /= static_cast<double>(items.size());
  r.si_snri /= static_cast<double>(items.size());
  return r;
}

TrainResult train(const TrainOptions &options, const EpochCallback &on_epoch) {
  return train(options, generate_dataset(options.data), on_epoch);
}

TrainResult train(const TrainOptions &options, const Dataset &data,
                  const EpochCallback &on_epoch) {
  if (options.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (data.train.empty()) throw ConfigError("training set is empty");
  if (options.data.sample_rate != options.config.sample_rate) {
    throw ConfigError("dataset sample rate " +
                      std::to_string(options.data.sample_rate) +
                      " Hz differs from the model's " +
                      std::to_string(options.config.sample_rate) + " Hz");
  }
  ModelParams params = init_model(options.config, options.seed);
  AdamState state;
  TrainResult result;
  result.best_valid_si_snri = -INFINITY;

  std::vector<size_t> order(data.train.size());
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(options.seed ^ kShuffleStream, static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng.engine());

    double total = 0.0;
    for (size_t i : order) {
      const double loss = train_step(params, data.train[i], state, options);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training diverged at epoch " +
                              std::to_string(epoch) + ", item " +
                              std::to_string(i) + ": loss or gradient is " +
                              std::to_string(loss));
      }
      total += loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    // Without a validation split the latest epoch counts as best.
    rec.valid_si_snri = data.valid.empty()
                            ? NAN
                            : evaluate(params, data.valid, options.workers).si_snri;
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (data.valid.empty() || rec.valid_si_snri > result.best_valid_si_snri) {
      result.best_valid_si_snri = rec.valid_si_snri;
      result.best_epoch = epoch;
      result.best = clone_model(params);
    }
    if (options.target_si_snri && rec.valid_si_snri >= *options.target_si_snri) {
      break;
    }
  }
  return result;
}

}  // namespace transmask
