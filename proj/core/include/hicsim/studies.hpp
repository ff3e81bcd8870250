// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_STUDIES_HPP
#define HICSIM_STUDIES_HPP

#include <functional>
#include <string>
#include <vector>

#include "hicsim/checkpoint.hpp"
#include "hicsim/config.hpp"
#include "hicsim/endurance.hpp"
#include "hicsim/metrics.hpp"

namespace hicsim {

// Progress callback for long studies. Messages go to the caller (the CLI
// routes them to stderr); output files never contain them.
using ProgressFn = std::function<void(const std::string&)>;

// Builds the dataset and network from the config, trains, and writes into
// out_dir: config.txt (the resolved config), metrics.csv, summary.txt,
// checkpoint.bin, and — when run.event_log is on — events.bin plus
// endurance.csv. All files are byte-identical across reruns.
struct TrainingOutputs {
  TrainResult result;
  std::string config_path;
  std::string metrics_path;
  std::string summary_path;
  std::string checkpoint_path;
  std::string events_path;     // empty when event logging is off
  std::string endurance_path;  // empty for non-hybrid backends
};
TrainingOutputs run_training(const ExperimentConfig& cfg, const std::string& out_dir,
                             const ProgressFn& progress = {});

// Non-ideality ablation: four switches over the linear and nonlinear
// programming curves plus the full model and an fp32 reference, each trained
// over ablation.seeds seeds (training.seed + s; the dataset seed is fixed so
// every variant sees identical data). Writes ablation_runs.csv,
// ablation_summary.csv, and config.txt.
struct AblationRow {
  std::string variant;
  std::string backend;
  bool nonlinear_prog = false;
  bool write_noise = false;
  bool read_noise = false;
  bool drift = false;
  std::vector<double> accs;  // final test accuracy per seed
  int diverged_runs = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation
};
struct AblationOutputs {
  std::vector<AblationRow> rows;
  std::string config_path;
  std::string runs_path;
  std::string summary_path;
};
AblationOutputs run_ablation(const ExperimentConfig& cfg, const std::string& out_dir,
                             const ProgressFn& progress = {});

// Post-training drift study. For each of sweep.training_runs independently
// seeded runs (or a single restored checkpoint), evaluates the test set at
// each sweep time after training end, sweep.inference_runs times:
// first with training-time batchnorm statistics (uncompensated), then after
// re-estimating batchnorm statistics at the evaluation time from an
// adabs_fraction subset of the training split. Writes drift_points.csv,
// drift_summary.csv, and config.txt.
struct DriftPoint {
  int run = 0;
  int rep = 0;
  double t_after_train = 0.0;
  double t_abs = 0.0;
  bool adabs = false;
  double test_loss = 0.0;
  double test_acc = 0.0;
};
struct DriftSweepOutputs {
  std::vector<DriftPoint> points;
  bool diverged = false;  // any training run diverged (its points are skipped)
  std::string config_path;
  std::string points_path;
  std::string summary_path;
};
DriftSweepOutputs run_drift_sweep(const ExperimentConfig& cfg,
                                  const std::string& out_dir,
                                  const std::string& checkpoint_path = "",
                                  const ProgressFn& progress = {});

// Trains with the programming-event log forced on, then cross-checks every
// device's wear counters against an independent replay of the event stream
// and writes endurance.csv, endurance_summary.txt, replay.txt, events.bin,
// and config.txt.
struct EnduranceOutputs {
  EnduranceReport report;
  bool replay_ok = false;
  bool diverged = false;
  std::string config_path;
  std::string report_path;
  std::string summary_path;
  std::string replay_path;
  std::string events_path;
};
EnduranceOutputs run_endurance(const ExperimentConfig& cfg, const std::string& out_dir,
                               const ProgressFn& progress = {});

// Generate the configured synthetic dataset and write train.csv / test.csv.
struct DatasetGenOutputs {
  std::string train_path;
  std::string test_path;
  int train_rows = 0;
  int test_rows = 0;
};
DatasetGenOutputs run_dataset_gen(const ExperimentConfig& cfg,
                                  const std::string& out_dir);

// Shared helpers.
void ensure_directory(const std::string& dir);          // throws IoError
std::string join_path(const std::string& dir, const std::string& name);
std::vector<int> sample_shape(const Tensor& t);          // shape without batch dim
std::string training_summary_text(const ExperimentConfig& cfg, const TrainResult& res,
                                  const Network& net);

}  // namespace hicsim

#endif  // HICSIM_STUDIES_HPP
