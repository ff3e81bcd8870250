// SPDX-License-Identifier: Apache-2.0
//
// hicsim: command line front end for the hybrid in-memory computing
// training simulator.
//
// Exit codes: 0 success, 1 internal error, 2 configuration error,
// 3 training diverged, 4 I/O error.
//
// Output files are byte-identical across reruns of the same command;
// wall-clock timing and progress go to stderr only.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "hicsim/studies.hpp"

namespace {

enum LogLevel { kLogError = 0, kLogWarn = 1, kLogInfo = 2, kLogDebug = 3 };
int g_log_level = kLogInfo;

void logmsg(int level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= g_log_level) std::fprintf(stderr, "[%s] %s\n", names[level], msg.c_str());
}

int level_from_name(const std::string& s) {
  if (s == "error") return kLogError;
  if (s == "warn") return kLogWarn;
  if (s == "info") return kLogInfo;
  return kLogDebug;
}

void emit(const std::string& line) { std::printf("%s\n", line.c_str()); }

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid in-memory computing training simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string log_level = "info";
  std::string checkpoint_path;
  std::uint64_t seed = 0;
  int threads = 0;

  app.add_option("--config", config_path, "experiment config file (key = value lines)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override training.seed");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  CLI::Option* threads_opt =
      app.add_option("--threads", threads, "override training.threads");
  app.add_option("--log-level", log_level, "stderr verbosity")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  CLI::App* cmd_train =
      app.add_subcommand("train", "train one network and write metrics + checkpoint");
  CLI::App* cmd_ablation =
      app.add_subcommand("ablation", "train the non-ideality ablation grid");
  CLI::App* cmd_sweep = app.add_subcommand(
      "drift-sweep", "evaluate accuracy vs. time after training, with and "
                     "without batchnorm re-calibration");
  cmd_sweep->add_option("--checkpoint", checkpoint_path,
                        "restore this training state instead of training");
  CLI::App* cmd_endurance = app.add_subcommand(
      "endurance", "train with event logging and audit device wear counters");
  CLI::App* cmd_dataset = app.add_subcommand("dataset", "dataset utilities");
  cmd_dataset->require_subcommand(1);
  CLI::App* cmd_dataset_gen =
      cmd_dataset->add_subcommand("gen", "write the configured dataset as CSV");

  for (CLI::App* sub : {cmd_train, cmd_ablation, cmd_sweep, cmd_endurance, cmd_dataset,
                        cmd_dataset_gen})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  g_log_level = level_from_name(log_level);

  const auto wall_start = std::chrono::steady_clock::now();
  const hicsim::ProgressFn progress = [](const std::string& m) { logmsg(kLogInfo, m); };

  try {
    hicsim::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = hicsim::load_config_file(config_path);
      logmsg(kLogDebug, "loaded config " + config_path);
    }
    if (*seed_opt) cfg.training.seed = seed;
    if (*threads_opt) cfg.training.threads = threads;

    int exit_code = kExitOk;
    if (cmd_train->parsed()) {
      const hicsim::TrainingOutputs out = hicsim::run_training(cfg, out_dir, progress);
      const hicsim::MetricsRecord last =
          out.result.records.empty() ? hicsim::MetricsRecord{} : out.result.records.back();
      emit("diverged = " + std::string(out.result.diverged ? "true" : "false"));
      emit("final_test_acc = " + hicsim::format_double(last.test_acc));
      emit("metrics = " + out.metrics_path);
      emit("summary = " + out.summary_path);
      emit("checkpoint = " + out.checkpoint_path);
      if (!out.events_path.empty()) emit("events = " + out.events_path);
      if (!out.endurance_path.empty()) emit("endurance = " + out.endurance_path);
      if (out.result.diverged) exit_code = kExitDiverged;
    } else if (cmd_ablation->parsed()) {
      const hicsim::AblationOutputs out = hicsim::run_ablation(cfg, out_dir, progress);
      for (const hicsim::AblationRow& r : out.rows)
        emit(r.variant + ": mean_test_acc = " + hicsim::format_double(r.mean_acc) +
             ", std = " + hicsim::format_double(r.std_acc) +
             (r.diverged_runs ? ", diverged_runs = " + std::to_string(r.diverged_runs)
                              : ""));
      emit("runs = " + out.runs_path);
      emit("summary = " + out.summary_path);
    } else if (cmd_sweep->parsed()) {
      const hicsim::DriftSweepOutputs out =
          hicsim::run_drift_sweep(cfg, out_dir, checkpoint_path, progress);
      emit("points = " + out.points_path);
      emit("summary = " + out.summary_path);
      if (out.diverged) {
        logmsg(kLogError, "at least one training run diverged");
        exit_code = kExitDiverged;
      }
    } else if (cmd_endurance->parsed()) {
      const hicsim::EnduranceOutputs out = hicsim::run_endurance(cfg, out_dir, progress);
      emit("max_cycles = " + std::to_string(out.report.max_cycles));
      emit("max_fraction_of_limit = " + hicsim::format_double(out.report.max_fraction));
      emit("replay_matches = " + std::string(out.replay_ok ? "true" : "false"));
      emit("report = " + out.report_path);
      if (out.diverged) exit_code = kExitDiverged;
      else if (!out.replay_ok) exit_code = kExitInternal;
    } else if (cmd_dataset_gen->parsed()) {
      const hicsim::DatasetGenOutputs out = hicsim::run_dataset_gen(cfg, out_dir);
      emit("train = " + out.train_path + " (" + std::to_string(out.train_rows) + " rows)");
      emit("test = " + out.test_path + " (" + std::to_string(out.test_rows) + " rows)");
    }

    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "done in %.2f s (wall clock)", wall_s);
    logmsg(kLogInfo, buf);
    return exit_code;
  } catch (const hicsim::ConfigError& e) {
    logmsg(kLogError, std::string("config: ") + e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    logmsg(kLogError, std::string("config: ") + e.what());
    return kExitConfig;
  } catch (const hicsim::CheckpointError& e) {
    logmsg(kLogError, std::string("checkpoint: ") + e.what());
    return kExitIo;
  } catch (const hicsim::IoError& e) {
    logmsg(kLogError, std::string("io: ") + e.what());
    return kExitIo;
  } catch (const std::runtime_error& e) {
    logmsg(kLogError, std::string("io: ") + e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    logmsg(kLogError, e.what());
    return kExitInternal;
  }
}
