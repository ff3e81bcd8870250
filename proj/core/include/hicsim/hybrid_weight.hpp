// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_HYBRID_WEIGHT_HPP
#define HICSIM_HYBRID_WEIGHT_HPP

#include <cstdint>
#include <vector>

#include "hicsim/device.hpp"
#include "hicsim/event_log.hpp"
#include "hicsim/quant.hpp"
#include "hicsim/rng.hpp"
#include "hicsim/sim_clock.hpp"

namespace hicsim {

// Closed-loop programming policy for the differential pair.
struct ProgramPolicy {
  double verify_tol_frac = 0.25;   // acceptance band, fraction of g_unit
  int max_verify_pulses = 30;      // pulse budget per program_msb call
  double refresh_threshold = 0.9;  // fraction of g_max that triggers refresh
  int refresh_attempts = 3;        // reset+reprogram retries before giving up

  void validate() const;
};

struct ProgramResult {
  int pulses = 0;
  bool converged = false;
  bool recovered = false;  // verify failure triggered a reset+reprogram
};

struct AccumulateResult {
  int carry = 0;           // applied MSB carry (after rail clamping)
  int flips = 0;           // bit-plane flips written
  int msb_pulses = 0;      // SET pulses spent on the pair
  bool clamped = false;    // accumulator or carry hit a rail
  bool refreshed = false;  // verify failure forced a reset+reprogram
};

struct RefreshResult {
  bool triggered = false;
  int pulses = 0;
  bool converged = true;
};

// Cumulative per-matrix update statistics (serialized with checkpoints).
struct UpdateCounters {
  std::uint64_t accumulates = 0;
  std::uint64_t lsb_flips = 0;
  std::uint64_t carries = 0;      // accumulate calls with nonzero carry
  std::uint64_t clamps = 0;       // rail-clamp events
  std::uint64_t msb_programs = 0; // program_msb invocations
  std::uint64_t msb_pulses = 0;   // SET pulses across both pair devices
  std::uint64_t refreshes = 0;    // reset+reprogram events (incl. forced)
  std::uint64_t verify_failures = 0;
};

// One logical weight matrix backed by PCM state: a differential multi-level
// pair per entry plus lsb_bits binary planes forming a signed two's-complement
// update accumulator. Logical weight value:
//   w(i,j) = level(i,j) * delta_msb + acc(i,j) * delta_lsb
// where only the MSB pair participates in analog VMM; the accumulator is
// internal state that carries into the pair on overflow.
class HybridWeightMatrix {
 public:
  HybridWeightMatrix(int rows, int cols, const QuantScheme& scheme,
                     const DeviceModelParams& params, const ProgramPolicy& policy,
                     std::uint32_t array_id, std::uint64_t seed,
                     EventLog* log = nullptr);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const QuantScheme& scheme() const { return scheme_; }
  const DeviceModelParams& params() const { return params_; }
  const ProgramPolicy& policy() const { return policy_; }
  std::uint32_t array_id() const { return array_id_; }

  // Raw device access (crossbar reads, persistence, tests).
  MultiLevelDevice& plus(int i, int j) { return plus_[idx(i, j)]; }
  MultiLevelDevice& minus(int i, int j) { return minus_[idx(i, j)]; }
  const MultiLevelDevice& plus(int i, int j) const { return plus_[idx(i, j)]; }
  const MultiLevelDevice& minus(int i, int j) const { return minus_[idx(i, j)]; }
  BinaryDevice& plane(int b, int i, int j) { return planes_[b][idx(i, j)]; }
  const BinaryDevice& plane(int b, int i, int j) const { return planes_[b][idx(i, j)]; }

  DeviceKey key_plus(int i, int j) const;
  DeviceKey key_minus(int i, int j) const;
  DeviceKey key_plane(int b, int i, int j) const;

  NoiseSource& noise() { return noise_; }
  const NoiseSource& noise() const { return noise_; }
  EventLog* log() { return log_; }

  // Logical state decode from programmed conductances (no drift, no noise).
  int logical_level(int i, int j) const;
  int lsb_value(int i, int j) const;
  double decode_msb(int i, int j) const;  // level * delta_msb, ideal
  double decode(int i, int j) const;      // full ideal weight

  // Model-faithful reads at simulation time t.
  double read_msb(int i, int j, double t, ReadMode mode);
  int read_lsb(int i, int j, double t, ReadMode mode);
  double read_weight(int i, int j, double t, ReadMode mode);

  // Closed-loop program of the differential pair to a target level.
  ProgramResult program_msb(int i, int j, int target_level, const SimClock& clock);

  // Overwrite the accumulator bit planes; returns flip count.
  int lsb_write(int i, int j, int value, const SimClock& clock);

  // Apply a signed tick update q: read accumulator, add, carry into MSB.
  AccumulateResult accumulate(int i, int j, int q, const SimClock& clock,
                              ReadMode mode = ReadMode::kIdeal);

  // Conditional conductance refresh: reset+reprogram when either pair device
  // exceeds refresh_threshold * g_max. Preserves the logical level.
  RefreshResult refresh(int i, int j, const SimClock& clock);
  bool needs_refresh(int i, int j) const;

  // Internal read-draw counter (persisted for reproducibility).
  std::uint64_t read_seq() const { return read_seq_; }
  void set_read_seq(std::uint64_t v) { read_seq_ = v; }

  UpdateCounters& counters() { return counters_; }
  const UpdateCounters& counters() const { return counters_; }

  double verify_tol_g() const { return policy_.verify_tol_frac * scheme_.g_unit; }

 private:
  int idx(int i, int j) const { return i * cols_ + j; }
  // Reset both pair devices and re-program target from scratch.
  ProgramResult force_reprogram(int i, int j, int target_level, const SimClock& clock);
  double pair_diff_ideal(int i, int j) const;

  int rows_;
  int cols_;
  QuantScheme scheme_;
  DeviceModelParams params_;
  ProgramPolicy policy_;
  std::uint32_t array_id_;
  NoiseSource noise_;
  EventLog* log_;
  std::vector<MultiLevelDevice> plus_;
  std::vector<MultiLevelDevice> minus_;
  std::vector<std::vector<BinaryDevice>> planes_;
  std::uint64_t read_seq_;
  UpdateCounters counters_;
};

}  // namespace hicsim

#endif  // HICSIM_HYBRID_WEIGHT_HPP
