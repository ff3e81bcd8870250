// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_TRAINER_HPP
#define HICSIM_TRAINER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hicsim/dataset.hpp"
#include "hicsim/nn.hpp"
#include "hicsim/sim_clock.hpp"

namespace hicsim {

struct TrainingConfig {
  double learning_rate = 0.05;
  double lr_decay_factor = 0.45;
  std::vector<int> lr_decay_epochs;  // empty: decay at 50% and 75% of epochs
  int batch_size = 100;
  int epochs = 10;
  int refresh_interval_batches = 10;
  double width_multiplier = 1.0;
  std::uint64_t seed = 1;
  GradQuantizer quantizer;
  double seconds_per_batch = 1.0;
  double adabs_fraction = 0.05;
  int threads = 1;

  void validate() const;
  // The effective schedule: configured points, or the 50%/75% default.
  std::vector<int> decay_schedule() const;
};

// One per-epoch row of the metrics stream. Deliberately excludes wall-clock
// time so output files are reproducible byte-for-byte.
struct MetricsRecord {
  std::uint64_t run_id = 0;
  int epoch = 0;
  long long step = 0;  // batches completed so far
  double sim_time = 0.0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  ApplyStats stats;    // cumulative device update counters
  int refreshes = 0;   // cumulative refresh-sweep hits
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  std::vector<MetricsRecord> records;
  bool diverged = false;
  int diverged_epoch = -1;
  double final_test_acc = 0.0;
  ApplyStats stats;
  int refreshes = 0;
};

// Deterministic epoch ordering: Fisher-Yates driven by counter-based draws
// keyed on (seed, epoch).
std::vector<int> epoch_permutation(int n, std::uint64_t seed, int epoch);

// Gather batch rows `idx[first, first+count)` from the split.
void gather_batch(const Tensor& x, const std::vector<int>& y,
                  const std::vector<int>& idx, int first, int count, Tensor& bx,
                  std::vector<int>& by);

// One optimization step: forward (training mode), backward, quantized update.
// Returns the batch loss/accuracy before the update.
struct StepResult {
  double loss = 0.0;
  int correct = 0;
  ApplyStats stats;
};
StepResult train_step(Network& net, const Tensor& bx, const std::vector<int>& by,
                      double lr, const GradQuantizer& q, SimClock& clock, ReadMode mode,
                      int threads, PassCache& cache);

EvalResult evaluate(Network& net, const Tensor& x, const std::vector<int>& y, double t,
                    ReadMode mode, int batch_size, int threads);

// Full training loop: per-epoch shuffle, converter warmup then freeze,
// refresh cadence, step decay, per-epoch evaluation. Non-finite loss stops
// the run early with partial records and diverged = true.
TrainResult train(Network& net, const Dataset& data, const TrainingConfig& cfg,
                  SimClock& clock, ReadMode mode = ReadMode::kNoisy,
                  std::uint64_t run_id = 0);

// AdaBS: replace every batchnorm layer's running statistics with population
// statistics collected at simulation time t over a deterministic (strided)
// calibration subset of the training split. The subset is forwarded as a
// single batch so normalization during collection matches the adopted stats.
void adabs_calibrate(Network& net, const Tensor& train_x, const std::vector<int>& train_y,
                     double t, double fraction, ReadMode mode, int threads);

}  // namespace hicsim

#endif  // HICSIM_TRAINER_HPP
