// SPDX-License-Identifier: Apache-2.0

#include "hicsim/studies.hpp"

#include <cmath>
#include <filesystem>
#include <utility>

namespace hicsim {

namespace {

void say(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// One complete training: dataset, event log, network, clock, result.
struct LiveRun {
  Dataset data;
  EventLog log;
  Network net;
  SimClock clock;
  TrainResult res;
};

void execute_training(const ExperimentConfig& cfg, std::uint64_t seed, LiveRun& run,
                      const ProgressFn& progress) {
  run.data = load_dataset(cfg.dataset);
  run.log.set_enabled(cfg.event_log);
  BackendConfig bc = cfg.backend_config(&run.log);
  bc.seed = seed;
  run.net = build_network(cfg.arch, cfg.training.width_multiplier,
                          sample_shape(run.data.train_x), run.data.classes, bc);
  run.clock = SimClock{0.0, cfg.training.seconds_per_batch};
  run.net.init_weights(seed, run.clock);
  TrainingConfig tc = cfg.training;
  tc.seed = seed;
  run.res = train(run.net, run.data, tc, run.clock, cfg.read_mode(), seed);
  say(progress, "seed " + std::to_string(seed) + ": final test accuracy " +
                    format_double(run.res.final_test_acc) +
                    (run.res.diverged ? " (diverged)" : ""));
}

}  // namespace

void ensure_directory(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return (std::filesystem::path(dir) / name).string();
}

std::vector<int> sample_shape(const Tensor& t) {
  if (t.shape.size() < 2)
    throw std::invalid_argument("dataset tensor must have a batch dimension");
  return std::vector<int>(t.shape.begin() + 1, t.shape.end());
}

std::string training_summary_text(const ExperimentConfig& cfg, const TrainResult& res,
                                  const Network& net) {
  const MetricsRecord last = res.records.empty() ? MetricsRecord{} : res.records.back();
  std::string out;
  out += "run_id = " + std::to_string(cfg.training.seed) + "\n";
  out += "backend = " + cfg.backend + "\n";
  out += "arch = " + cfg.arch + "\n";
  out += "diverged = " + std::string(res.diverged ? "true" : "false") + "\n";
  out += "epochs_recorded = " + std::to_string(last.epoch) + "\n";
  out += "steps = " + std::to_string(last.step) + "\n";
  out += "sim_time_end_s = " + format_double(last.sim_time) + "\n";
  out += "final_train_loss = " + format_double(last.train_loss) + "\n";
  out += "final_train_acc = " + format_double(last.train_acc) + "\n";
  out += "final_test_loss = " + format_double(last.test_loss) + "\n";
  out += "final_test_acc = " + format_double(last.test_acc) + "\n";
  out += "flips = " + std::to_string(res.stats.flips) + "\n";
  out += "carries = " + std::to_string(res.stats.carries) + "\n";
  out += "clamps = " + std::to_string(res.stats.clamps) + "\n";
  out += "tick_clips = " + std::to_string(res.stats.tick_clips) + "\n";
  out += "msb_pulses = " + std::to_string(res.stats.msb_pulses) + "\n";
  out += "forced_refreshes = " + std::to_string(res.stats.refreshes) + "\n";
  out += "sweep_refreshes = " + std::to_string(res.refreshes) + "\n";
  out += "crossbar_params = " + std::to_string(net.crossbar_params()) + "\n";
  out += "digital_params = " + std::to_string(net.digital_params()) + "\n";
  return out;
}

TrainingOutputs run_training(const ExperimentConfig& cfg, const std::string& out_dir,
                             const ProgressFn& progress) {
  cfg.validate();
  ensure_directory(out_dir);
  LiveRun run;
  execute_training(cfg, cfg.training.seed, run, progress);

  TrainingOutputs out;
  out.result = run.res;
  out.config_path = join_path(out_dir, "config.txt");
  save_config_file(out.config_path, cfg);
  out.metrics_path = join_path(out_dir, "metrics.csv");
  write_metrics_csv(out.metrics_path, run.res.records);
  out.summary_path = join_path(out_dir, "summary.txt");
  write_text_file(out.summary_path, training_summary_text(cfg, run.res, run.net));
  out.checkpoint_path = join_path(out_dir, "checkpoint.bin");
  save_checkpoint(out.checkpoint_path, run.net, run.clock);
  if (cfg.event_log) {
    out.events_path = join_path(out_dir, "events.bin");
    run.log.save(out.events_path);
  }
  const EnduranceReport rep = endurance_report(run.net);
  if (!rep.arrays.empty()) {
    out.endurance_path = join_path(out_dir, "endurance.csv");
    write_text_file(out.endurance_path, endurance_table(rep).to_string());
  }
  return out;
}

AblationOutputs run_ablation(const ExperimentConfig& cfg, const std::string& out_dir,
                             const ProgressFn& progress) {
  cfg.validate();
  ensure_directory(out_dir);

  struct Variant {
    const char* name;
    const char* backend;
    bool nl, w, r, d;
  };
  // Axes: programming curve (linear/nonlinear) x {write noise, read noise,
  // drift}, the full device model, and the fp32 reference.
  const Variant variants[] = {
      {"linear", "hybrid", false, false, false, false},
      {"linear+w", "hybrid", false, true, false, false},
      {"linear+r", "hybrid", false, false, true, false},
      {"linear+d", "hybrid", false, false, false, true},
      {"nonlinear", "hybrid", true, false, false, false},
      {"nonlinear+w", "hybrid", true, true, false, false},
      {"nonlinear+r", "hybrid", true, false, true, false},
      {"nonlinear+d", "hybrid", true, false, false, true},
      {"nonlinear+wr", "hybrid", true, true, true, false},
      {"nonlinear+wd", "hybrid", true, true, false, true},
      {"nonlinear+rd", "hybrid", true, false, true, true},
      {"full", "hybrid", true, true, true, true},
      {"fp32", "fp32", false, false, false, false},
  };

  AblationOutputs out;
  CsvTable runs_table({"variant", "backend", "nonlinear_prog", "write_noise",
                       "read_noise", "drift", "seed", "test_acc", "diverged"});
  for (const Variant& v : variants) {
    ExperimentConfig c = cfg;
    c.backend = v.backend;
    c.device.nonlinear_prog = v.nl;
    c.device.write_noise = v.w;
    c.device.read_noise = v.r;
    c.device.drift = v.d;

    AblationRow row;
    row.variant = v.name;
    row.backend = v.backend;
    row.nonlinear_prog = v.nl;
    row.write_noise = v.w;
    row.read_noise = v.r;
    row.drift = v.d;
    say(progress, std::string("ablation variant ") + v.name);
    for (int s = 0; s < cfg.ablation_seeds; ++s) {
      const std::uint64_t seed = cfg.training.seed + static_cast<std::uint64_t>(s);
      LiveRun run;
      execute_training(c, seed, run, progress);
      row.accs.push_back(run.res.final_test_acc);
      if (run.res.diverged) row.diverged_runs += 1;
      runs_table.add_row({row.variant, row.backend, v.nl ? "1" : "0", v.w ? "1" : "0",
                          v.r ? "1" : "0", v.d ? "1" : "0", std::to_string(seed),
                          format_double(run.res.final_test_acc),
                          run.res.diverged ? "1" : "0"});
    }
    row.mean_acc = mean_of(row.accs);
    row.std_acc = sample_std(row.accs, row.mean_acc);
    out.rows.push_back(std::move(row));
  }

  CsvTable summary_table({"variant", "backend", "nonlinear_prog", "write_noise",
                          "read_noise", "drift", "runs", "diverged_runs",
                          "mean_test_acc", "std_test_acc"});
  for (const AblationRow& r : out.rows) {
    summary_table.add_row({r.variant, r.backend, r.nonlinear_prog ? "1" : "0",
                           r.write_noise ? "1" : "0", r.read_noise ? "1" : "0",
                           r.drift ? "1" : "0", std::to_string(r.accs.size()),
                           std::to_string(r.diverged_runs), format_double(r.mean_acc),
                           format_double(r.std_acc)});
  }

  out.config_path = join_path(out_dir, "config.txt");
  save_config_file(out.config_path, cfg);
  out.runs_path = join_path(out_dir, "ablation_runs.csv");
  write_text_file(out.runs_path, runs_table.to_string());
  out.summary_path = join_path(out_dir, "ablation_summary.csv");
  write_text_file(out.summary_path, summary_table.to_string());
  return out;
}

DriftSweepOutputs run_drift_sweep(const ExperimentConfig& cfg,
                                  const std::string& out_dir,
                                  const std::string& checkpoint_path,
                                  const ProgressFn& progress) {
  cfg.validate();
  ensure_directory(out_dir);

  DriftSweepOutputs out;
  const int n_runs = checkpoint_path.empty() ? cfg.sweep_training_runs : 1;
  const int reps = cfg.sweep_inference_runs;
  const ReadMode mode = cfg.read_mode();

  for (int r = 0; r < n_runs; ++r) {
    LiveRun run;
    if (!checkpoint_path.empty()) {
      // Restore a previously trained state instead of training.
      run.data = load_dataset(cfg.dataset);
      BackendConfig bc = cfg.backend_config(nullptr);
      run.net = build_network(cfg.arch, cfg.training.width_multiplier,
                              sample_shape(run.data.train_x), run.data.classes, bc);
      run.clock = SimClock{0.0, cfg.training.seconds_per_batch};
      const double t_saved = load_checkpoint(checkpoint_path, run.net);
      run.clock.advance_to(t_saved);
      say(progress, "restored checkpoint at sim time " + format_double(t_saved));
    } else {
      execute_training(cfg, cfg.training.seed + static_cast<std::uint64_t>(r), run,
                       progress);
      if (run.res.diverged) {
        out.diverged = true;
        say(progress, "run " + std::to_string(r) + " diverged; skipping its sweep");
        continue;
      }
    }
    const double t_end = run.clock.now;

    // Uncompensated arm first: batchnorm running statistics straight from
    // training. The compensated arm below overwrites them.
    for (double t : cfg.sweep_times)
      for (int rep = 0; rep < reps; ++rep) {
        const EvalResult ev =
            evaluate(run.net, run.data.test_x, run.data.test_y, t_end + t, mode,
                     cfg.training.batch_size, cfg.training.threads);
        out.points.push_back({r, rep, t, t_end + t, false, ev.loss, ev.accuracy});
      }
    for (double t : cfg.sweep_times) {
      adabs_calibrate(run.net, run.data.train_x, run.data.train_y, t_end + t,
                      cfg.training.adabs_fraction, mode, cfg.training.threads);
      for (int rep = 0; rep < reps; ++rep) {
        const EvalResult ev =
            evaluate(run.net, run.data.test_x, run.data.test_y, t_end + t, mode,
                     cfg.training.batch_size, cfg.training.threads);
        out.points.push_back({r, rep, t, t_end + t, true, ev.loss, ev.accuracy});
      }
    }
    say(progress, "run " + std::to_string(r) + " swept " +
                      std::to_string(cfg.sweep_times.size()) + " time points");
  }

  CsvTable points_table({"run", "rep", "t_after_train_s", "t_abs_s", "adabs",
                         "test_loss", "test_acc"});
  for (const DriftPoint& p : out.points)
    points_table.add_row({std::to_string(p.run), std::to_string(p.rep),
                          format_double(p.t_after_train), format_double(p.t_abs),
                          p.adabs ? "1" : "0", format_double(p.test_loss),
                          format_double(p.test_acc)});

  CsvTable summary_table({"t_after_train_s", "adabs", "n", "mean_test_acc",
                          "std_test_acc", "mean_test_loss"});
  for (double t : cfg.sweep_times)
    for (int arm = 0; arm < 2; ++arm) {
      std::vector<double> accs;
      std::vector<double> losses;
      for (const DriftPoint& p : out.points)
        if (p.t_after_train == t && p.adabs == (arm == 1)) {
          accs.push_back(p.test_acc);
          losses.push_back(p.test_loss);
        }
      const double m = mean_of(accs);
      summary_table.add_row({format_double(t), arm ? "1" : "0",
                             std::to_string(accs.size()), format_double(m),
                             format_double(sample_std(accs, m)),
                             format_double(mean_of(losses))});
    }

  out.config_path = join_path(out_dir, "config.txt");
  save_config_file(out.config_path, cfg);
  out.points_path = join_path(out_dir, "drift_points.csv");
  write_text_file(out.points_path, points_table.to_string());
  out.summary_path = join_path(out_dir, "drift_summary.csv");
  write_text_file(out.summary_path, summary_table.to_string());
  return out;
}

EnduranceOutputs run_endurance(const ExperimentConfig& cfg, const std::string& out_dir,
                               const ProgressFn& progress) {
  ExperimentConfig c = cfg;
  c.event_log = true;  // the replay check needs the full event stream
  c.validate();
  ensure_directory(out_dir);

  LiveRun run;
  execute_training(c, c.training.seed, run, progress);

  EnduranceOutputs out;
  out.diverged = run.res.diverged;
  out.report = endurance_report(run.net);
  std::string why;
  out.replay_ok = replay_matches(run.net, run.log.events(), &why);

  out.config_path = join_path(out_dir, "config.txt");
  save_config_file(out.config_path, c);
  out.report_path = join_path(out_dir, "endurance.csv");
  write_text_file(out.report_path, endurance_table(out.report).to_string());
  out.summary_path = join_path(out_dir, "endurance_summary.txt");
  write_text_file(out.summary_path, endurance_summary_text(out.report));
  out.replay_path = join_path(out_dir, "replay.txt");
  std::string replay_text =
      "events = " + std::to_string(run.log.size()) + "\n" +
      "replay_matches = " + (out.replay_ok ? "true" : "false") + "\n";
  if (!why.empty()) replay_text += why;
  write_text_file(out.replay_path, replay_text);
  out.events_path = join_path(out_dir, "events.bin");
  run.log.save(out.events_path);
  say(progress, "replay " + std::string(out.replay_ok ? "matched" : "MISMATCHED") +
                    " over " + std::to_string(run.log.size()) + " events");
  return out;
}

DatasetGenOutputs run_dataset_gen(const ExperimentConfig& cfg,
                                  const std::string& out_dir) {
  cfg.validate();
  ensure_directory(out_dir);
  const Dataset data = load_dataset(cfg.dataset);
  DatasetGenOutputs out;
  out.train_path = join_path(out_dir, "train.csv");
  write_csv(out.train_path, data.train_x, data.train_y);
  out.test_path = join_path(out_dir, "test.csv");
  write_csv(out.test_path, data.test_x, data.test_y);
  out.train_rows = data.train_x.batch();
  out.test_rows = data.test_x.batch();
  return out;
}

}  // namespace hicsim
