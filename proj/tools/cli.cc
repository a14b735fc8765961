// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "settings.h"
#include "transmask/audio_io.h"
#include "transmask/bench.h"
#include "transmask/checkpoint.h"
#include "transmask/dataset.h"
#include "transmask/errors.h"
#include "transmask/gradcheck.h"
#include "transmask/pipeline.h"
#include "transmask/trainer.h"

namespace transmask::cli {
namespace {

struct TrainArgs {
  std::string config;
  std::string out;
  std::string log;
  std::optional<int> epochs;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
};

struct SeparateArgs {
  std::string ckpt;
  std::string in;
  std::string out_dir;
  int workers = 1;
  bool pcm16 = false;
};

struct BenchArgs {
  std::string ckpt;
  bool random = false;
  std::string config;
  std::string in;
  std::string out;
  std::vector<int> mults = {1, 2, 4, 8};
  int workers = 1;
  int reps = 5;
  double seconds = 2.0;
  bool no_baseline = false;
  std::optional<uint64_t> seed;
};

struct GradcheckArgs {
  std::string scale = "small";
  std::optional<uint64_t> seed;
};

std::ofstream open_output(const std::string &path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

int cmd_train(const TrainArgs &a, std::ostream &out, std::ostream &err) {
  Settings s = load_settings(a.config);
  TrainOptions &t = s.train;
  if (a.epochs) t.epochs = *a.epochs;
  if (a.workers) t.workers = *a.workers;
  t.seed = resolve_seed(a.seed, t.seed);
  t.config.validate();

  const std::string log_path = a.log.empty() ? a.out + ".metrics.jsonl" : a.log;
  std::ofstream log = open_output(log_path);
  err << "training " << to_string(t.config.separator) << " for up to "
      << t.epochs << " epochs, seed " << t.seed << '\n';

  TrainResult result = train(t, [&](const EpochRecord &r) {
    const std::string line = to_json_line(r);
    log << line << '\n' << std::flush;
    out << line << '\n' << std::flush;
  });
  save_checkpoint(a.out, result.best);

  nlohmann::json summary;
  summary["checkpoint"] = a.out;
  summary["metrics_log"] = log_path;
  summary["epochs_run"] = result.log.size();
  summary["best_epoch"] = result.best_epoch;
  summary["best_valid_si_snri"] = result.best_valid_si_snri;
  out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_separate(const SeparateArgs &a, std::ostream &out, std::ostream &err) {
  const ModelParams params = load_checkpoint(a.ckpt);
  const AudioBuffer mixture = read_wav(a.in);
  if (mixture.sample_rate != params.config.sample_rate) {
    throw ConfigError("input sample rate " +
                      std::to_string(mixture.sample_rate) +
                      " Hz does not match the checkpoint's " +
                      std::to_string(params.config.sample_rate) + " Hz");
  }
  std::filesystem::create_directories(a.out_dir);
  const std::vector<AudioBuffer> sources =
      separate_audio(mixture, params, a.workers);
  const WavEncoding enc = a.pcm16 ? WavEncoding::kPcm16 : WavEncoding::kFloat32;
  for (size_t i = 0; i < sources.size(); ++i) {
    const std::filesystem::path path =
        std::filesystem::path(a.out_dir) / ("spk" + std::to_string(i + 1) + ".wav");
    write_wav(sources[i], path.string(), enc);
    out << path.string() << '\n';
  }
  err << "separated " << mixture.seconds() << " s into " << sources.size()
      << " sources\n";
  return kExitOk;
}

int cmd_bench(const BenchArgs &a, std::ostream &out, std::ostream &err) {
  const uint64_t seed = resolve_seed(a.seed, 0);
  std::vector<BenchModel> models;
  if (!a.ckpt.empty()) {
    ModelParams p = load_checkpoint(a.ckpt);
    models.push_back({to_string(p.config.separator), std::move(p)});
  } else {
    ModelConfig cfg = a.config.empty() ? ModelConfig{}
                                       : load_settings(a.config).train.config;
    cfg.validate();
    models.push_back({to_string(cfg.separator), init_model(cfg, seed)});
  }
  const ModelConfig &primary = models.front().params.config;
  if (!a.no_baseline && primary.separator == SeparatorKind::kStrnn) {
    const ModelConfig base = dprnn_baseline_config(primary);
    models.push_back({to_string(base.separator), init_model(base, seed + 1)});
  }

  AudioBuffer audio;
  if (!a.in.empty()) {
    audio = read_wav(a.in);
  } else {
    SyntheticMixSpec spec;
    spec.seed = seed;
    spec.duration = a.seconds;
    spec.sample_rate = primary.sample_rate;
    audio = generate_item(spec, 0).mixture;
  }

  BenchOptions o;
  o.mults = a.mults;
  o.workers = a.workers;
  o.repetitions = a.reps;
  const std::vector<BenchRow> rows = run_bench(models, audio, o);
  for (const BenchRow &r : rows) {
    if (r.failed) {
      err << r.model << " x" << r.mult << " failed: " << r.error << '\n';
    }
  }
  if (a.out.empty() || a.out == "-") {
    write_bench_csv(out, rows);
  } else {
    std::ofstream f = open_output(a.out);
    write_bench_csv(f, rows);
    if (!f) throw IoError("failed writing '" + a.out + "'");
  }
  return kExitOk;
}

int cmd_gradcheck(const GradcheckArgs &a, std::ostream &out,
                  std::ostream &err) {
  const GradCheckScale scale =
      a.scale == "tiny" ? GradCheckScale::kTiny : GradCheckScale::kSmall;
  const std::vector<GradCheckResult> results =
      run_gradcheck_suite(scale, resolve_seed(a.seed, 7));
  out << "op,max_rel_error,tolerance,entries,passed\n";
  int failed = 0;
  char buf[64];
  for (const GradCheckResult &r : results) {
    std::snprintf(buf, sizeof buf, "%.3e,%.1e", r.max_rel_error, r.tolerance);
    out << r.name << ',' << buf << ',' << r.entries << ','
        << (r.passed() ? "true" : "false") << '\n';
    if (!r.passed()) {
      ++failed;
      err << "FAIL " << r.name << ": relative error " << r.max_rel_error
          << " exceeds " << r.tolerance << '\n';
    }
  }
  err << (results.size() - failed) << '/' << results.size()
      << " gradient checks passed\n";
  return failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Speech separation with single-path recurrent transformers",
               "transmask"};
  app.require_subcommand(1);

  TrainArgs ta;
  CLI::App *train_cmd = app.add_subcommand("train", "Train on synthetic mixtures");
  train_cmd->add_option("--config", ta.config, "key=value settings file")
      ->required();
  train_cmd->add_option("--out", ta.out, "checkpoint path")->required();
  train_cmd->add_option("--log", ta.log,
                        "metrics JSONL path (default: <out>.metrics.jsonl)");
  train_cmd->add_option("--epochs", ta.epochs, "override epochs")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", ta.seed, "override seed");
  train_cmd->add_option("--workers", ta.workers, "validation workers")
      ->check(CLI::PositiveNumber);

  SeparateArgs sa;
  CLI::App *sep_cmd = app.add_subcommand("separate", "Separate a WAV mixture");
  sep_cmd->add_option("--ckpt", sa.ckpt, "checkpoint path")->required();
  sep_cmd->add_option("--in", sa.in, "input WAV")->required();
  sep_cmd->add_option("--out-dir", sa.out_dir, "output directory")->required();
  sep_cmd->add_option("--workers", sa.workers, "worker threads")
      ->check(CLI::PositiveNumber);
  sep_cmd->add_flag("--pcm16", sa.pcm16, "write 16-bit PCM instead of float");

  BenchArgs ba;
  CLI::App *bench_cmd = app.add_subcommand("bench", "Real-time-factor sweep");
  CLI::Option *ckpt_opt =
      bench_cmd->add_option("--ckpt", ba.ckpt, "checkpoint to benchmark");
  CLI::Option *random_opt =
      bench_cmd->add_flag("--random", ba.random, "use a randomly initialised model");
  ckpt_opt->excludes(random_opt);
  bench_cmd->add_option("--config", ba.config,
                        "settings file for --random (model keys)")
      ->needs(random_opt);
  bench_cmd->add_option("--in", ba.in, "input WAV (default: synthetic mixture)");
  bench_cmd->add_option("--seconds", ba.seconds, "synthetic input length")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--mults", ba.mults, "length multipliers")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", ba.workers, "worker threads")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--reps", ba.reps, "timed repetitions")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", ba.out, "CSV path (default: stdout)");
  bench_cmd->add_flag("--no-baseline", ba.no_baseline,
                      "skip the dual-path baseline");
  bench_cmd->add_option("--seed", ba.seed, "initialisation and input seed");

  GradcheckArgs ga;
  CLI::App *gc_cmd =
      app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gc_cmd->add_option("--scale", ga.scale, "tiny or small")
      ->check(CLI::IsMember({"tiny", "small"}));
  gc_cmd->add_option("--seed", ga.seed, "input seed");

  try {
    app.parse(argc, argv);
    if (bench_cmd->parsed() && ba.ckpt.empty() && !ba.random) {
      throw CLI::ValidationError("bench", "one of --ckpt or --random is required");
    }
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const std::vector<CLI::App *> subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (sep_cmd->parsed()) return cmd_separate(sa, out, err);
    if (bench_cmd->parsed()) return cmd_bench(ba, out, err);
    return cmd_gradcheck(ga, out, err);
  } catch (const DivergenceError &e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace transmask::cli
