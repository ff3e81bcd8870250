// SPDX-License-Identifier: Apache-2.0

#include "hicsim/hybrid_weight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hicsim {

namespace {

// Internal read draws live far above the crossbar's per-op read indices so
// the two consumers of kSaltReadNoise never share a counter value.
constexpr std::uint64_t kInternalReadBase = 1ULL << 40;

}  // namespace

void ProgramPolicy::validate() const {
  if (!(verify_tol_frac > 0.0 && verify_tol_frac < 0.5))
    throw std::invalid_argument("program policy: verify_tol_frac must be in (0, 0.5)");
  if (max_verify_pulses < 1)
    throw std::invalid_argument("program policy: max_verify_pulses must be >= 1");
  if (!(refresh_threshold > 0.0 && refresh_threshold <= 1.0))
    throw std::invalid_argument("program policy: refresh_threshold must be in (0, 1]");
  if (refresh_attempts < 1)
    throw std::invalid_argument("program policy: refresh_attempts must be >= 1");
}

HybridWeightMatrix::HybridWeightMatrix(int rows, int cols, const QuantScheme& scheme,
                                       const DeviceModelParams& params,
                                       const ProgramPolicy& policy,
                                       std::uint32_t array_id, std::uint64_t seed,
                                       EventLog* log)
    : rows_(rows),
      cols_(cols),
      scheme_(scheme),
      params_(params),
      policy_(policy),
      array_id_(array_id),
      noise_(seed),
      log_(log),
      read_seq_(kInternalReadBase) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("hybrid weight matrix: rows and cols must be >= 1");
  if (rows > 0xFFFF || cols > 0xFFFF)
    throw std::invalid_argument("hybrid weight matrix: dimension exceeds device addressing");
  params_.validate();
  scheme_.validate(params_);
  policy_.validate();
  const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  plus_.assign(n, make_multi_level_device(params_));
  minus_.assign(n, make_multi_level_device(params_));
  planes_.assign(static_cast<std::size_t>(scheme_.lsb_bits),
                 std::vector<BinaryDevice>(n, make_binary_device(params_)));
}

DeviceKey HybridWeightMatrix::key_plus(int i, int j) const {
  return DeviceKey{array_id_, static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j), 0};
}

DeviceKey HybridWeightMatrix::key_minus(int i, int j) const {
  return DeviceKey{array_id_, static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j), 1};
}

DeviceKey HybridWeightMatrix::key_plane(int b, int i, int j) const {
  return DeviceKey{array_id_, static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j),
                   static_cast<std::uint8_t>(2 + b)};
}

double HybridWeightMatrix::pair_diff_ideal(int i, int j) const {
  return plus_[idx(i, j)].g_prog - minus_[idx(i, j)].g_prog;
}

int HybridWeightMatrix::logical_level(int i, int j) const {
  const long lvl = std::lround(pair_diff_ideal(i, j) / scheme_.g_unit);
  return static_cast<int>(std::clamp<long>(lvl, -scheme_.levels, scheme_.levels));
}

int HybridWeightMatrix::lsb_value(int i, int j) const {
  int u = 0;
  for (int b = 0; b < scheme_.lsb_bits; ++b) {
    u |= static_cast<int>(planes_[b][idx(i, j)].state) << b;
  }
  return u >= scheme_.acc_half() ? u - 2 * scheme_.acc_half() : u;
}

double HybridWeightMatrix::decode_msb(int i, int j) const {
  return pair_diff_ideal(i, j) / scheme_.g_unit * scheme_.delta_msb();
}

double HybridWeightMatrix::decode(int i, int j) const {
  return decode_msb(i, j) + static_cast<double>(lsb_value(i, j)) * scheme_.delta_lsb();
}

double HybridWeightMatrix::read_msb(int i, int j, double t, ReadMode mode) {
  if (mode == ReadMode::kIdeal) return decode_msb(i, j);
  const double gp =
      read_analog(plus_[idx(i, j)], params_, t, noise_, key_plus(i, j), read_seq_++);
  const double gm =
      read_analog(minus_[idx(i, j)], params_, t, noise_, key_minus(i, j), read_seq_++);
  return (gp - gm) / scheme_.g_unit * scheme_.delta_msb();
}

int HybridWeightMatrix::read_lsb(int i, int j, double t, ReadMode mode) {
  if (mode == ReadMode::kIdeal) return lsb_value(i, j);
  int u = 0;
  for (int b = 0; b < scheme_.lsb_bits; ++b) {
    u |= read_bit(planes_[b][idx(i, j)], params_, t, noise_, key_plane(b, i, j),
                  read_seq_++)
         << b;
  }
  return u >= scheme_.acc_half() ? u - 2 * scheme_.acc_half() : u;
}

double HybridWeightMatrix::read_weight(int i, int j, double t, ReadMode mode) {
  return read_msb(i, j, t, mode) +
         static_cast<double>(read_lsb(i, j, t, mode)) * scheme_.delta_lsb();
}

ProgramResult HybridWeightMatrix::program_msb(int i, int j, int target_level,
                                              const SimClock& clock) {
  if (target_level < -scheme_.levels || target_level > scheme_.levels)
    throw std::invalid_argument("program_msb: target level out of range");
  counters_.msb_programs += 1;

  // Program-and-verify: pulse whichever pair half reduces the error, verify
  // against the just-programmed state (verify reads follow each pulse
  // immediately, so no drift has accumulated and read averaging is assumed).
  const double target_g = static_cast<double>(target_level) * scheme_.g_unit;
  const double tol = verify_tol_g();
  ProgramResult res;
  for (;;) {
    const double err = target_g - pair_diff_ideal(i, j);
    if (std::abs(err) <= tol) {
      res.converged = true;
      break;
    }
    if (res.pulses >= policy_.max_verify_pulses) break;
    if (err > 0.0) {
      set_pulse(plus_[idx(i, j)], params_, clock, noise_, key_plus(i, j));
      if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                             static_cast<std::uint16_t>(j), 0, DeviceOp::kSetPulse);
    } else {
      set_pulse(minus_[idx(i, j)], params_, clock, noise_, key_minus(i, j));
      if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                             static_cast<std::uint16_t>(j), 1, DeviceOp::kSetPulse);
    }
    res.pulses += 1;
  }
  counters_.msb_pulses += static_cast<std::uint64_t>(res.pulses);

  if (!res.converged) {
    // Conductance head-room is gone (or noise ate the budget): fall back to
    // a full reset + reprogram of the pair.
    counters_.verify_failures += 1;
    const ProgramResult rec = force_reprogram(i, j, target_level, clock);
    res.pulses += rec.pulses;
    res.converged = rec.converged;
    res.recovered = true;
  }
  return res;
}

ProgramResult HybridWeightMatrix::force_reprogram(int i, int j, int target_level,
                                                  const SimClock& clock) {
  counters_.refreshes += 1;
  const double target_g = static_cast<double>(target_level) * scheme_.g_unit;
  const double tol = verify_tol_g();
  ProgramResult total;
  for (int attempt = 0; attempt < policy_.refresh_attempts; ++attempt) {
    reset(plus_[idx(i, j)], params_, clock);
    if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                           static_cast<std::uint16_t>(j), 0, DeviceOp::kReset);
    reset(minus_[idx(i, j)], params_, clock);
    if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                           static_cast<std::uint16_t>(j), 1, DeviceOp::kReset);
    for (int p = 0; p < policy_.max_verify_pulses; ++p) {
      const double err = target_g - pair_diff_ideal(i, j);
      if (std::abs(err) <= tol) break;
      if (err > 0.0) {
        set_pulse(plus_[idx(i, j)], params_, clock, noise_, key_plus(i, j));
        if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                               static_cast<std::uint16_t>(j), 0, DeviceOp::kSetPulse);
      } else {
        set_pulse(minus_[idx(i, j)], params_, clock, noise_, key_minus(i, j));
        if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                               static_cast<std::uint16_t>(j), 1, DeviceOp::kSetPulse);
      }
      total.pulses += 1;
    }
    if (std::abs(target_g - pair_diff_ideal(i, j)) <= tol) {
      total.converged = true;
      break;
    }
    counters_.verify_failures += 1;
  }
  counters_.msb_pulses += static_cast<std::uint64_t>(total.pulses);
  return total;
}

int HybridWeightMatrix::lsb_write(int i, int j, int value, const SimClock& clock) {
  if (value < scheme_.acc_min() || value > scheme_.acc_max())
    throw std::invalid_argument("lsb_write: value out of accumulator range");
  const unsigned mask = (1u << scheme_.lsb_bits) - 1u;
  const unsigned u = static_cast<unsigned>(value) & mask;  // two's complement
  int flips = 0;
  for (int b = 0; b < scheme_.lsb_bits; ++b) {
    BinaryDevice& dev = planes_[b][idx(i, j)];
    const int bit = static_cast<int>((u >> b) & 1u);
    const std::uint8_t before = dev.state;
    write_bit(dev, params_, bit, clock, noise_, key_plane(b, i, j));
    if (dev.state != before) {
      flips += 1;
      if (log_) log_->record(array_id_, static_cast<std::uint16_t>(i),
                             static_cast<std::uint16_t>(j),
                             static_cast<std::uint8_t>(2 + b),
                             bit ? DeviceOp::kBitSet : DeviceOp::kBitClear);
    }
  }
  counters_.lsb_flips += static_cast<std::uint64_t>(flips);
  return flips;
}

AccumulateResult HybridWeightMatrix::accumulate(int i, int j, int q,
                                                const SimClock& clock, ReadMode mode) {
  counters_.accumulates += 1;
  const int half = scheme_.acc_half();
  const int a = read_lsb(i, j, clock.now, mode);
  const int a1 = a + q;
  int carry = a1 / half;  // truncation toward zero; -half carries
  const int level = logical_level(i, j);
  const int carry_cl =
      std::clamp(carry, -scheme_.levels - level, scheme_.levels - level);
  int residual = a1 - carry_cl * half;

  AccumulateResult res;
  res.clamped = carry_cl != carry;
  if (residual < scheme_.acc_min()) {
    residual = scheme_.acc_min();
    res.clamped = true;
  } else if (residual > scheme_.acc_max()) {
    residual = scheme_.acc_max();
    res.clamped = true;
  }
  res.carry = carry_cl;
  res.flips = lsb_write(i, j, residual, clock);
  if (carry_cl != 0) {
    counters_.carries += 1;
    const ProgramResult pr = program_msb(i, j, level + carry_cl, clock);
    res.msb_pulses = pr.pulses;
    res.refreshed = pr.recovered;
  }
  if (res.clamped) counters_.clamps += 1;
  return res;
}

bool HybridWeightMatrix::needs_refresh(int i, int j) const {
  const double limit = policy_.refresh_threshold * params_.g_max;
  return plus_[idx(i, j)].g_prog >= limit || minus_[idx(i, j)].g_prog >= limit;
}

RefreshResult HybridWeightMatrix::refresh(int i, int j, const SimClock& clock) {
  RefreshResult res;
  if (!needs_refresh(i, j)) return res;
  res.triggered = true;
  const int level = logical_level(i, j);
  const ProgramResult pr = force_reprogram(i, j, level, clock);
  res.pulses = pr.pulses;
  res.converged = pr.converged;
  return res;
}

}  // namespace hicsim
