// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_DEVICE_HPP
#define HICSIM_DEVICE_HPP

#include <cstdint>

#include "hicsim/rng.hpp"
#include "hicsim/sim_clock.hpp"

namespace hicsim {

// Statistical model parameters shared by all PCM devices of one run.
//
// The model has four switchable non-ideal components: stochastic write,
// stochastic read, temporal conductance drift, and the nonlinear programming
// curve. Defaults are calibration placeholders, sized to give roughly 15
// resolvable differential levels and visible drift over 1e6..1e7 s; they are
// all configurable through the experiment config.
struct DeviceModelParams {
  double g_max = 25.0;        // conductance ceiling (uS)
  double g_min = 0.1;         // RESET conductance (uS)
  double delta0 = 3.0;        // mean increment of the first SET pulse after RESET (uS)
  double delta_lin = 1.25;    // per-pulse increment when the programming curve is linear (uS)
  double sigma_write = 1.0;   // std of per-pulse write noise (uS)
  double sigma_read = 0.2;    // std of per-read noise (uS)
  double nu_mean = 0.05;      // drift exponent mean
  double nu_sigma = 0.02;     // drift exponent std (resampled per programming event)
  double t0 = 1.0;            // drift reference time (s)
  double g_high = 20.0;       // binary high-state target conductance (uS)
  double g_threshold = 5.0;   // binary read decision threshold (uS)
  int pulses_per_cycle = 10;  // SET pulses per write-erase cycle

  // Non-ideality switches (the ablation axes).
  bool write_noise = true;
  bool read_noise = true;
  bool drift = true;
  bool nonlinear_prog = true;

  void validate() const;  // throws std::invalid_argument on violation

  double effective_sigma_write() const { return write_noise ? sigma_write : 0.0; }
  double effective_sigma_read() const { return read_noise ? sigma_read : 0.0; }
};

// Identifies one physical device for the per-device noise streams.
// plane: 0 = G+, 1 = G- on the MSB array; 2..2+lsb_bits-1 = LSB bit planes.
struct DeviceKey {
  std::uint32_t array_id = 0;
  std::uint16_t row = 0;
  std::uint16_t col = 0;
  std::uint8_t plane = 0;
};

// One element of a multi-level differential pair.
struct MultiLevelDevice {
  double g_prog = 0.0;  // conductance at last programming event (uS)
  double t_prog = 0.0;  // simulation time of last programming event (s)
  double nu = 0.0;      // drift exponent sampled at last programming event
  int n_set = 0;        // SET pulses since last RESET
  int set_in_cycle = 0;  // SET pulses in the currently open write-erase cycle
  std::int64_t cycles = 0;  // completed write-erase cycles
  std::int64_t events = 0;  // programming events consumed from the noise stream
};

// Binary-level storage cell. state=1 means g_prog was drawn around g_high,
// state=0 means g_prog = g_min.
struct BinaryDevice {
  std::uint8_t state = 0;
  double g_prog = 0.0;
  double t_prog = 0.0;
  double nu = 0.0;
  std::int64_t flips = 0;
  std::int64_t cycles = 0;
  int set_in_cycle = 0;
  std::int64_t events = 0;
};

MultiLevelDevice make_multi_level_device(const DeviceModelParams& p);
BinaryDevice make_binary_device(const DeviceModelParams& p);

// Conductance at time t with drift applied, before read noise:
//   g_prog * ((t - t_prog + t0) / t0)^(-nu)
// Drift restarts at each programming event. Throws std::logic_error when
// t < t_prog (clock-ordering fault).
double drifted_conductance(double g_prog, double t_prog, double nu,
                           const DeviceModelParams& p, double t);

// One SET pulse. The increment builds on the drifted conductance at
// clock.now, the drift exponent is resampled, and cycle bookkeeping rolls
// over after pulses_per_cycle SETs.
void set_pulse(MultiLevelDevice& dev, const DeviceModelParams& p,
               const SimClock& clock, const NoiseSource& noise, DeviceKey key);

// RESET pulse: conductance back to g_min, closes the open write-erase cycle
// if one exists. A reset of an already-reset device is a no-op for the
// cycle counter.
void reset(MultiLevelDevice& dev, const DeviceModelParams& p, const SimClock& clock);
void reset(BinaryDevice& dev, const DeviceModelParams& p, const SimClock& clock);

// Drifted, noisy read at time t. Pure given the draw: device state is not
// modified. read_index distinguishes repeated reads of the same device.
double read_analog(const MultiLevelDevice& dev, const DeviceModelParams& p,
                   double t, const NoiseSource& noise, DeviceKey key,
                   std::uint64_t read_index);

// Read-noise stage alone, applied to an already-drifted conductance. Lets
// callers that cache drifted conductances reproduce read_analog exactly.
double noisy_read(double g_drifted, const DeviceModelParams& p,
                  const NoiseSource& noise, DeviceKey key, std::uint64_t read_index);
double read_analog(const BinaryDevice& dev, const DeviceModelParams& p,
                   double t, const NoiseSource& noise, DeviceKey key,
                   std::uint64_t read_index);

// Writes a logical bit by reading and flipping the stored state. Writing the
// current value programs nothing.
void write_bit(BinaryDevice& dev, const DeviceModelParams& p, int bit,
               const SimClock& clock, const NoiseSource& noise, DeviceKey key);

// Thresholded analog read.
int read_bit(const BinaryDevice& dev, const DeviceModelParams& p, double t,
             const NoiseSource& noise, DeviceKey key, std::uint64_t read_index);

}  // namespace hicsim

#endif  // HICSIM_DEVICE_HPP
