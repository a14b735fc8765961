// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include "transmask/bench.h"
#include "transmask/codec.h"
#include "transmask/dataset.h"
#include "transmask/objective.h"
#include "transmask/ops.h"
#include "transmask/pipeline.h"
#include "transmask/random.h"
#include "transmask/separator.h"
#include "transmask/trainer.h"

namespace transmask {
namespace {

ModelConfig desk_config(SeparatorKind kind = SeparatorKind::kStrnn) {
  ModelConfig c;
  c.d_model = c.enc_filters = 32;
  c.lstm_hidden = 32;
  c.n_heads = 4;
  c.d_ffn = 128;
  c.n_layers = 2;
  c.chunk_hop = 8;
  c.separator = kind;
  return c;
}

AudioBuffer clip(double seconds) {
  SyntheticMixSpec spec;
  spec.duration = seconds;
  return generate_item(spec, 0).mixture;
}

void BM_Matmul(benchmark::State &state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  const Tensor a = uniform_tensor({n, n}, rng, -1, 1);
  const Tensor b = uniform_tensor({n, n}, rng, -1, 1);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

// Intra-chunk recurrence over 2P steps for a batch of chunks.
void BM_BiLstm(benchmark::State &state) {
  const ModelParams m = init_model(desk_config(), 2);
  Rng rng(3);
  const Tensor x = uniform_tensor({16, state.range(0), 32}, rng, -1, 1);
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bidirectional_lstm(x, m.separator.strnn[0].intra.rnn));
  }
}
BENCHMARK(BM_BiLstm)->Arg(16)->Arg(64)->Arg(256);

// Strided attention block over S chunks for 2P = 16 offsets.
void BM_SandwichBlock(benchmark::State &state) {
  const ModelParams m = init_model(desk_config(), 4);
  Rng rng(5);
  const Tensor x = uniform_tensor({16, state.range(0), 32}, rng, -1, 1);
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sandwich_block(x, m.separator.strnn[0].inter));
  }
}
BENCHMARK(BM_SandwichBlock)->Arg(16)->Arg(64)->Arg(256);

// End-to-end inference; the argument multiplies a 0.5 s clip.
void separate_bench(benchmark::State &state, SeparatorKind kind) {
  const ModelParams m = init_model(desk_config(kind), 6);
  const AudioBuffer audio = repeat(clip(0.5), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(separate_audio(audio, m));
  const int64_t frames =
      frame_count(audio.frames(), m.config.enc_kernel, m.config.enc_stride);
  state.counters["audio_s"] = audio.seconds();
  state.counters["seq_steps"] =
      static_cast<double>(count_sequential_steps(m.config, frames));
  state.counters["rtf"] = benchmark::Counter(
      audio.seconds(), benchmark::Counter::kIsIterationInvariantRate |
                           benchmark::Counter::kInvert);
}
void BM_SeparateStrnn(benchmark::State &state) {
  separate_bench(state, SeparatorKind::kStrnn);
}
void BM_SeparateBaseline(benchmark::State &state) {
  separate_bench(state, SeparatorKind::kDprnnBaseline);
}
BENCHMARK(BM_SeparateStrnn)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeparateBaseline)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

// One optimiser step on a 2 s utterance.
void BM_TrainStep(benchmark::State &state) {
  TrainOptions opts;
  opts.config = desk_config();
  ModelParams m = init_model(opts.config, 7);
  const MixItem item = generate_item(opts.data, 0);
  AdamState adam;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(m, item, adam, opts));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace transmask

BENCHMARK_MAIN();
