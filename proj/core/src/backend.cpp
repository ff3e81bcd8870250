// SPDX-License-Identifier: Apache-2.0

#include "hicsim/backend.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace hicsim {

int quantize_ticks(double scaled, GradQuantizer::Rounding rounding, int clip_ticks,
                   const NoiseSource& noise, std::uint32_t array_id, int i, int j,
                   std::uint64_t update_seq, bool* clipped) {
  double q;
  if (rounding == GradQuantizer::Rounding::kNearest) {
    q = std::nearbyint(scaled);
  } else {
    const double fl = std::floor(scaled);
    const double frac = scaled - fl;
    const double u = noise.uniform(kSaltStochasticRound, array_id,
                                   static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j), update_seq);
    q = fl + (u < frac ? 1.0 : 0.0);
  }
  const double lim = static_cast<double>(clip_ticks);
  if (clipped) *clipped = q > lim || q < -lim;
  return static_cast<int>(std::clamp(q, -lim, lim));
}

namespace {

int round_level(double w, const QuantScheme& s) {
  const long lvl = std::lround(w / s.delta_msb());
  return static_cast<int>(std::clamp<long>(lvl, -s.levels, s.levels));
}

}  // namespace

// ---------------------------------------------------------------------------
// HybridBackend

HybridBackend::HybridBackend(int rows, int cols, const BackendConfig& cfg,
                             std::uint32_t array_id)
    : matrix_(rows, cols, cfg.scheme, cfg.device, cfg.policy, array_id, cfg.seed,
              cfg.log),
      crossbar_(matrix_, cfg.crossbar) {}

void HybridBackend::program_initial(const std::vector<double>& w, const SimClock& clock) {
  if (static_cast<int>(w.size()) != rows() * cols())
    throw std::invalid_argument("program_initial: weight size mismatch");
  for (int i = 0; i < rows(); ++i)
    for (int j = 0; j < cols(); ++j)
      matrix_.program_msb(i, j, round_level(w[static_cast<std::size_t>(i) * cols() + j],
                                            matrix_.scheme()),
                          clock);
  crossbar_.invalidate_snapshot();
}

bool HybridBackend::calibrating() const {
  return crossbar_.params().converter.enabled && !crossbar_.frozen();
}

void HybridBackend::freeze_calibration() {
  if (!crossbar_.frozen()) crossbar_.freeze_clips();
}

int HybridBackend::calibration_batches() const {
  return crossbar_.params().converter.enabled ? crossbar_.params().converter.warmup_batches
                                              : 0;
}

void HybridBackend::forward(const double* x, double* y, double t, ReadMode mode,
                            std::uint64_t op_id) {
  if (calibrating() && record_calibration_)
    crossbar_.forward_calibrating(x, y, t, mode, op_id);
  else
    crossbar_.forward(x, y, t, mode, op_id);
}

void HybridBackend::backward(const double* dy, double* dx, double t, ReadMode mode,
                             std::uint64_t op_id) {
  if (calibrating() && record_calibration_)
    crossbar_.backward_calibrating(dy, dx, t, mode, op_id);
  else
    crossbar_.backward(dy, dx, t, mode, op_id);
}

std::uint64_t HybridBackend::reserve_ops(std::uint64_t n) {
  const std::uint64_t base = crossbar_.op_seq();
  crossbar_.set_op_seq(base + n);
  return base;
}

ApplyStats HybridBackend::apply_update(const double* dw, double lr,
                                       const GradQuantizer& q, const SimClock& clock) {
  ApplyStats stats;
  const double delta_lsb = matrix_.scheme().delta_lsb();
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) {
      const double scaled = -lr * dw[static_cast<std::size_t>(i) * cols() + j] / delta_lsb;
      bool clipped = false;
      const int ticks = quantize_ticks(scaled, q.rounding, q.clip_ticks, matrix_.noise(),
                                       matrix_.array_id(), i, j, update_seq_, &clipped);
      if (clipped) stats.tick_clips += 1;
      if (ticks == 0) continue;
      const AccumulateResult r = matrix_.accumulate(i, j, ticks, clock, ReadMode::kNoisy);
      stats.flips += static_cast<std::uint64_t>(r.flips);
      if (r.carry != 0) stats.carries += 1;
      if (r.clamped) stats.clamps += 1;
      stats.msb_pulses += static_cast<std::uint64_t>(r.msb_pulses);
      if (r.refreshed) stats.refreshes += 1;
    }
  }
  update_seq_ += 1;
  crossbar_.invalidate_snapshot();
  return stats;
}

std::vector<double> HybridBackend::logical_weights() const {
  std::vector<double> w(static_cast<std::size_t>(rows()) * cols());
  for (int i = 0; i < rows(); ++i)
    for (int j = 0; j < cols(); ++j)
      w[static_cast<std::size_t>(i) * cols() + j] = matrix_.decode(i, j);
  return w;
}

int HybridBackend::refresh_sweep(const SimClock& clock) {
  int refreshed = 0;
  for (int i = 0; i < rows(); ++i)
    for (int j = 0; j < cols(); ++j)
      if (matrix_.refresh(i, j, clock).triggered) refreshed += 1;
  if (refreshed > 0) crossbar_.invalidate_snapshot();
  return refreshed;
}

void HybridBackend::begin_batch(double t) { crossbar_.snapshot_drift(t); }

// ---------------------------------------------------------------------------
// FixedPointBackend

FixedPointBackend::FixedPointBackend(int rows, int cols, const QuantScheme& scheme,
                                     std::uint64_t seed)
    : rows_(rows),
      cols_(cols),
      scheme_(scheme),
      noise_(seed),
      levels_(static_cast<std::size_t>(rows) * cols, 0),
      accs_(static_cast<std::size_t>(rows) * cols, 0) {}

void FixedPointBackend::program_initial(const std::vector<double>& w,
                                        const SimClock& clock) {
  (void)clock;
  if (static_cast<int>(w.size()) != rows_ * cols_)
    throw std::invalid_argument("program_initial: weight size mismatch");
  for (std::size_t k = 0; k < w.size(); ++k) levels_[k] = round_level(w[k], scheme_);
  std::fill(accs_.begin(), accs_.end(), 0);
}

void FixedPointBackend::forward(const double* x, double* y, double t, ReadMode mode,
                                std::uint64_t op_id) {
  (void)t;
  (void)mode;
  (void)op_id;
  const double dm = scheme_.delta_msb();
  for (int j = 0; j < cols_; ++j) {
    double sum = 0.0;
    for (int i = 0; i < rows_; ++i)
      sum += x[i] * (static_cast<double>(levels_[idx(i, j)]) * dm);
    y[j] = sum;
  }
}

void FixedPointBackend::backward(const double* dy, double* dx, double t, ReadMode mode,
                                 std::uint64_t op_id) {
  (void)t;
  (void)mode;
  (void)op_id;
  const double dm = scheme_.delta_msb();
  for (int i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols_; ++j)
      sum += dy[j] * (static_cast<double>(levels_[idx(i, j)]) * dm);
    dx[i] = sum;
  }
}

ApplyStats FixedPointBackend::apply_update(const double* dw, double lr,
                                           const GradQuantizer& q, const SimClock& clock) {
  (void)clock;
  ApplyStats stats;
  const double delta_lsb = scheme_.delta_lsb();
  const int half = scheme_.acc_half();
  const int L = scheme_.levels;
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) {
      const int k = idx(i, j);
      const double scaled = -lr * dw[static_cast<std::size_t>(k)] / delta_lsb;
      bool clipped = false;
      const int ticks = quantize_ticks(scaled, q.rounding, q.clip_ticks, noise_, 0, i, j,
                                       update_seq_, &clipped);
      if (clipped) stats.tick_clips += 1;
      if (ticks == 0) continue;
      const int a1 = accs_[k] + ticks;
      int carry = a1 / half;  // truncation toward zero; -half carries
      const int carry_cl = std::clamp(carry, -L - levels_[k], L - levels_[k]);
      int r = a1 - carry_cl * half;
      bool clamped = carry_cl != carry;
      if (r < scheme_.acc_min()) {
        r = scheme_.acc_min();
        clamped = true;
      } else if (r > scheme_.acc_max()) {
        r = scheme_.acc_max();
        clamped = true;
      }
      const unsigned mask = (1u << scheme_.lsb_bits) - 1u;
      const unsigned before = static_cast<unsigned>(accs_[k]) & mask;
      const unsigned after = static_cast<unsigned>(r) & mask;
      stats.flips += static_cast<std::uint64_t>(std::popcount(before ^ after));
      accs_[k] = r;
      levels_[k] += carry_cl;
      if (carry_cl != 0) stats.carries += 1;
      if (clamped) stats.clamps += 1;
    }
  }
  update_seq_ += 1;
  return stats;
}

std::vector<double> FixedPointBackend::logical_weights() const {
  std::vector<double> w(levels_.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = static_cast<double>(levels_[k]) * scheme_.delta_msb() +
           static_cast<double>(accs_[k]) * scheme_.delta_lsb();
  return w;
}

void FixedPointBackend::set_state(int i, int j, int level, int acc) {
  levels_[idx(i, j)] = level;
  accs_[idx(i, j)] = acc;
}

// ---------------------------------------------------------------------------
// Fp32Backend

Fp32Backend::Fp32Backend(int rows, int cols)
    : rows_(rows), cols_(cols), w_(static_cast<std::size_t>(rows) * cols, 0.0) {}

void Fp32Backend::program_initial(const std::vector<double>& w, const SimClock& clock) {
  (void)clock;
  if (w.size() != w_.size())
    throw std::invalid_argument("program_initial: weight size mismatch");
  w_ = w;
}

void Fp32Backend::forward(const double* x, double* y, double t, ReadMode mode,
                          std::uint64_t op_id) {
  (void)t;
  (void)mode;
  (void)op_id;
  for (int j = 0; j < cols_; ++j) {
    double sum = 0.0;
    for (int i = 0; i < rows_; ++i)
      sum += x[i] * w_[static_cast<std::size_t>(i) * cols_ + j];
    y[j] = sum;
  }
}

void Fp32Backend::backward(const double* dy, double* dx, double t, ReadMode mode,
                           std::uint64_t op_id) {
  (void)t;
  (void)mode;
  (void)op_id;
  for (int i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (int j = 0; j < cols_; ++j)
      sum += dy[j] * w_[static_cast<std::size_t>(i) * cols_ + j];
    dx[i] = sum;
  }
}

ApplyStats Fp32Backend::apply_update(const double* dw, double lr, const GradQuantizer& q,
                                     const SimClock& clock) {
  (void)q;
  (void)clock;
  for (std::size_t k = 0; k < w_.size(); ++k) w_[k] -= lr * dw[k];
  return ApplyStats{};
}

// ---------------------------------------------------------------------------

std::unique_ptr<WeightBackend> make_backend(const BackendConfig& cfg, int rows,
                                            int cols, std::uint32_t array_id) {
  switch (cfg.kind) {
    case BackendConfig::Kind::kHybrid:
      return std::make_unique<HybridBackend>(rows, cols, cfg, array_id);
    case BackendConfig::Kind::kFixedPoint:
      return std::make_unique<FixedPointBackend>(rows, cols, cfg.scheme,
                                                 cfg.seed ^ array_id);
    case BackendConfig::Kind::kFp32:
      return std::make_unique<Fp32Backend>(rows, cols);
  }
  throw std::logic_error("make_backend: unknown backend kind");
}

}  // namespace hicsim
