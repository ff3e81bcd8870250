// SPDX-License-Identifier: Apache-2.0

#include "hicsim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "hicsim/rng.hpp"

namespace hicsim {

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0))
    throw std::invalid_argument("train: lr_decay_factor must be in (0, 1)");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (refresh_interval_batches < 1)
    throw std::invalid_argument("train: refresh_interval_batches must be >= 1");
  if (!(width_multiplier > 0.0))
    throw std::invalid_argument("train: width_multiplier must be > 0");
  if (!(seconds_per_batch > 0.0))
    throw std::invalid_argument("train: seconds_per_batch must be > 0");
  if (!(adabs_fraction > 0.0 && adabs_fraction <= 1.0))
    throw std::invalid_argument("train: adabs_fraction must be in (0, 1]");
  if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
  for (int e : lr_decay_epochs)
    if (e < 1) throw std::invalid_argument("train: decay epochs must be >= 1");
}

std::vector<int> TrainingConfig::decay_schedule() const {
  if (!lr_decay_epochs.empty()) return lr_decay_epochs;
  std::vector<int> s;
  if (epochs / 2 >= 1) s.push_back(epochs / 2);
  if (epochs * 3 / 4 >= 1 && epochs * 3 / 4 != epochs / 2) s.push_back(epochs * 3 / 4);
  return s;
}

std::vector<int> epoch_permutation(int n, std::uint64_t seed, int epoch) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  const NoiseSource ns(seed);
  for (int i = n - 1; i > 0; --i) {
    const std::uint64_t r = ns.bits(kSaltShuffle, static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(i));
    const int j = static_cast<int>(r % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

void gather_batch(const Tensor& x, const std::vector<int>& y, const std::vector<int>& idx,
                  int first, int count, Tensor& bx, std::vector<int>& by) {
  std::vector<int> shape = x.shape;
  shape[0] = count;
  if (bx.shape != shape) bx = Tensor(shape);
  by.resize(static_cast<std::size_t>(count));
  const long long ss = x.sample_size();
  for (int i = 0; i < count; ++i) {
    const int src = idx[static_cast<std::size_t>(first + i)];
    std::memcpy(bx.sample(i), x.sample(src), static_cast<std::size_t>(ss) * sizeof(double));
    by[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(src)];
  }
}

StepResult train_step(Network& net, const Tensor& bx, const std::vector<int>& by,
                      double lr, const GradQuantizer& q, SimClock& clock, ReadMode mode,
                      int threads, PassCache& cache) {
  net.begin_batch(clock.now);
  const Network::BatchResult fr =
      net.forward(bx, by, clock.now, mode, /*training=*/true, threads, cache);
  net.backward(clock.now, mode, threads, cache);
  StepResult res;
  res.loss = fr.loss;
  res.correct = fr.correct;
  res.stats = net.apply_updates(lr, q, clock, cache);
  return res;
}

EvalResult evaluate(Network& net, const Tensor& x, const std::vector<int>& y, double t,
                    ReadMode mode, int batch_size, int threads) {
  const int n = x.batch();
  if (n == 0) throw std::invalid_argument("evaluate: empty split");
  net.begin_batch(t);
  PassCache cache;
  Tensor bx;
  std::vector<int> by;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  double loss_sum = 0.0;
  int correct = 0;
  for (int first = 0; first < n; first += batch_size) {
    const int count = std::min(batch_size, n - first);
    gather_batch(x, y, idx, first, count, bx, by);
    const Network::BatchResult r =
        net.forward(bx, by, t, mode, /*training=*/false, threads, cache);
    loss_sum += r.loss * count;
    correct += r.correct;
  }
  return EvalResult{loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult train(Network& net, const Dataset& data, const TrainingConfig& cfg,
                  SimClock& clock, ReadMode mode, std::uint64_t run_id) {
  cfg.validate();
  const int n = data.train_x.batch();
  if (n < cfg.batch_size)
    throw std::invalid_argument("train: batch_size exceeds the training split");

  TrainResult out;
  const std::vector<int> schedule = cfg.decay_schedule();
  const int calib_batches = net.calibration_batches();
  double lr = cfg.learning_rate;
  long long step = 0;

  const auto snapshot = [&](int epoch, double train_loss, double train_acc) {
    const EvalResult ev =
        evaluate(net, data.test_x, data.test_y, clock.now, mode, cfg.batch_size,
                 cfg.threads);
    MetricsRecord rec;
    rec.run_id = run_id;
    rec.epoch = epoch;
    rec.step = step;
    rec.sim_time = clock.now;
    rec.lr = lr;
    rec.train_loss = train_loss;
    rec.train_acc = train_acc;
    rec.test_loss = ev.loss;
    rec.test_acc = ev.accuracy;
    rec.stats = out.stats;
    rec.refreshes = out.refreshes;
    out.records.push_back(rec);
    out.final_test_acc = ev.accuracy;
  };

  // Epoch 0: the untrained (or pre-loaded) state.
  {
    const EvalResult tr = evaluate(net, data.train_x, data.train_y, clock.now, mode,
                                   cfg.batch_size, cfg.threads);
    snapshot(0, tr.loss, tr.accuracy);
  }

  PassCache cache;
  Tensor bx;
  std::vector<int> by;
  const int batches_per_epoch = n / cfg.batch_size;
  if (cfg.epochs > 0 && batches_per_epoch == 0)
    throw std::invalid_argument("train: no full batch available");

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (std::find(schedule.begin(), schedule.end(), epoch - 1) != schedule.end())
      lr *= cfg.lr_decay_factor;
    const std::vector<int> perm = epoch_permutation(n, cfg.seed, epoch);
    double loss_sum = 0.0;
    int correct = 0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      if (net.any_calibrating() && step >= calib_batches) net.freeze_calibration();
      gather_batch(data.train_x, data.train_y, perm, b * cfg.batch_size, cfg.batch_size,
                   bx, by);
      const StepResult sr =
          train_step(net, bx, by, lr, cfg.quantizer, clock, mode, cfg.threads, cache);
      step += 1;
      out.stats += sr.stats;
      loss_sum += sr.loss;
      correct += sr.correct;
      clock.advance_batch();
      if (step % cfg.refresh_interval_batches == 0)
        out.refreshes += net.refresh_sweep(clock);
      if (!std::isfinite(sr.loss)) {
        out.diverged = true;
        out.diverged_epoch = epoch;
        snapshot(epoch, loss_sum / (b + 1),
                 static_cast<double>(correct) / ((b + 1) * cfg.batch_size));
        return out;
      }
    }
    if (net.any_calibrating() && step >= calib_batches) net.freeze_calibration();
    snapshot(epoch, loss_sum / batches_per_epoch,
             static_cast<double>(correct) / (batches_per_epoch * cfg.batch_size));
  }
  return out;
}

void adabs_calibrate(Network& net, const Tensor& train_x, const std::vector<int>& train_y,
                     double t, double fraction, ReadMode mode, int threads) {
  const int n = train_x.batch();
  if (n == 0 || !(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("adabs: need a non-empty set and fraction in (0, 1]");
  const int m = std::max(1, static_cast<int>(std::lround(fraction * n)));
  // Deterministic strided subsample of the training split.
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    idx[static_cast<std::size_t>(i)] = static_cast<int>(
        (static_cast<long long>(i) * n) / m);

  // One forward over the whole calibration subset: batchnorm then normalizes
  // each layer with exactly the statistics adopted below, so downstream
  // layers are calibrated against the distribution they will actually see.
  BnStatsCollector coll;
  net.size_collector(coll);
  net.begin_batch(t);
  PassCache cache;
  Tensor bx;
  std::vector<int> by;
  gather_batch(train_x, train_y, idx, 0, m, bx, by);
  net.forward(bx, by, t, mode, /*training=*/false, threads, cache, &coll);
  net.adopt_bn_stats(coll);
}

}  // namespace hicsim
