// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/bench.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <new>

#include "transmask/chunker.h"
#include "transmask/codec.h"
#include "transmask/errors.h"
#include "transmask/pipeline.h"
#include "transmask/separator.h"

namespace transmask {

int64_t count_sequential_steps(const ModelConfig &config, int64_t frames) {
  const int64_t intra = config.chunk_size();
  if (config.separator == SeparatorKind::kStrnn) {
    return config.n_layers * intra;
  }
  const int64_t s = chunk_geometry(frames, config.chunk_hop).num_chunks;
  return config.n_layers * (intra + s);
}

std::vector<BenchRow> run_bench(const std::vector<BenchModel> &models,
                                const AudioBuffer &audio,
                                const BenchOptions &options) {
  if (options.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (options.workers < 1) throw ConfigError("workers must be >= 1");
  std::vector<BenchRow> rows;
  for (const BenchModel &model : models) {
    const ModelConfig &cfg = model.params.config;
    for (int mult : options.mults) {
      BenchRow row;
      row.model = model.name;
      row.mult = mult;
      row.workers = options.workers;
      try {
        AudioBuffer input = repeat(audio, mult);
        row.audio_seconds = input.seconds();
        const int64_t frames =
            frame_count(input.frames(), cfg.enc_kernel, cfg.enc_stride);
        row.sequential_steps = count_sequential_steps(cfg, frames);

        reset_sequential_step_tally();
        separate_audio(input, model.params, options.workers);  // warm-up
        if (sequential_step_tally() != row.sequential_steps) {
          throw ContractError(
              "instrumented step tally " +
              std::to_string(sequential_step_tally()) +
              " differs from closed form " +
              std::to_string(row.sequential_steps));
        }
        std::vector<double> times;
        for (int r = 0; r < options.repetitions; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          separate_audio(input, model.params, options.workers);
          times.push_back(std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count());
        }
        std::sort(times.begin(), times.end());
        const size_t n = times.size();
        row.wall_seconds = n % 2 ? times[n / 2]
                                 : 0.5 * (times[n / 2 - 1] + times[n / 2]);
        row.rtf = row.wall_seconds / row.audio_seconds;
      } catch (const ContractError &) {
        throw;
      } catch (const std::bad_alloc &) {
        row.failed = true;
        row.error = "out of memory";
      } catch (const std::exception &e) {
        row.failed = true;
        row.error = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream &out, const std::vector<BenchRow> &rows) {
  out << kBenchCsvHeader << '\n';
  char buf[64];
  for (const BenchRow &r : rows) {
    out << r.model << ',' << r.mult << ',';
    std::snprintf(buf, sizeof buf, "%.3f", r.audio_seconds);
    out << buf << ',';
    if (r.failed) {
      out << "nan,nan,";
    } else {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,", r.wall_seconds, r.rtf);
      out << buf;
    }
    out << r.sequential_steps << ',' << r.workers << '\n';
  }
}

}  // namespace transmask
