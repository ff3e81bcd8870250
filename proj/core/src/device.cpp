// SPDX-License-Identifier: Apache-2.0

#include "hicsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hicsim {

void DeviceModelParams::validate() const {
  if (!(0.0 <= g_min && g_min < g_threshold && g_threshold < g_high && g_high <= g_max))
    throw std::invalid_argument(
        "device params: require 0 <= g_min < g_threshold < g_high <= g_max");
  if (!(delta0 > 0.0)) throw std::invalid_argument("device params: delta0 must be > 0");
  if (!(delta_lin > 0.0)) throw std::invalid_argument("device params: delta_lin must be > 0");
  if (sigma_write < 0.0 || sigma_read < 0.0)
    throw std::invalid_argument("device params: noise sigmas must be >= 0");
  if (!(t0 > 0.0)) throw std::invalid_argument("device params: t0 must be > 0");
  if (pulses_per_cycle < 1)
    throw std::invalid_argument("device params: pulses_per_cycle must be >= 1");
}

MultiLevelDevice make_multi_level_device(const DeviceModelParams& p) {
  MultiLevelDevice d;
  d.g_prog = p.g_min;
  d.nu = p.nu_mean;
  return d;
}

BinaryDevice make_binary_device(const DeviceModelParams& p) {
  BinaryDevice d;
  d.g_prog = p.g_min;
  d.nu = p.nu_mean;
  return d;
}

double drifted_conductance(double g_prog, double t_prog, double nu,
                           const DeviceModelParams& p, double t) {
  if (t < t_prog) throw std::logic_error("read before last programming time");
  if (!p.drift || nu == 0.0) return g_prog;
  return g_prog * std::pow((t - t_prog + p.t0) / p.t0, -nu);
}

namespace {

// Drift exponent for the next programming event; negative draws are pinned
// at zero (no negative drift).
double sample_nu(const DeviceModelParams& p, const NoiseSource& noise,
                 const DeviceKey& key, std::int64_t event) {
  if (p.nu_sigma == 0.0) return p.nu_mean;
  const double draw = p.nu_mean +
                      p.nu_sigma * noise.gaussian(kSaltDriftNu, key.array_id, key.plane,
                                                  key.row, key.col,
                                                  static_cast<std::uint64_t>(event));
  return std::max(0.0, draw);
}

double write_noise_draw(const DeviceModelParams& p, const NoiseSource& noise,
                        const DeviceKey& key, std::int64_t event) {
  const double sigma = p.effective_sigma_write();
  if (sigma == 0.0) return 0.0;
  return sigma * noise.gaussian(kSaltWriteNoise, key.array_id, key.plane, key.row,
                                key.col, static_cast<std::uint64_t>(event));
}

}  // namespace

void set_pulse(MultiLevelDevice& dev, const DeviceModelParams& p,
               const SimClock& clock, const NoiseSource& noise, DeviceKey key) {
  const double g_now = drifted_conductance(dev.g_prog, dev.t_prog, dev.nu, p, clock.now);
  dev.n_set += 1;
  dev.set_in_cycle += 1;
  if (dev.set_in_cycle > p.pulses_per_cycle) {
    dev.cycles += 1;
    dev.set_in_cycle = 1;
  }
  const double increment =
      p.nonlinear_prog ? p.delta0 / static_cast<double>(dev.n_set) : p.delta_lin;
  const double g_new = g_now + increment + write_noise_draw(p, noise, key, dev.events);
  dev.g_prog = std::clamp(g_new, p.g_min, p.g_max);
  dev.t_prog = clock.now;
  dev.nu = sample_nu(p, noise, key, dev.events);
  dev.events += 1;
}

void reset(MultiLevelDevice& dev, const DeviceModelParams& p, const SimClock& clock) {
  if (dev.set_in_cycle > 0 || dev.g_prog > p.g_min) dev.cycles += 1;
  dev.set_in_cycle = 0;
  dev.n_set = 0;
  dev.g_prog = p.g_min;
  dev.t_prog = clock.now;
}

void reset(BinaryDevice& dev, const DeviceModelParams& p, const SimClock& clock) {
  if (dev.set_in_cycle > 0 || dev.state != 0) dev.cycles += 1;
  dev.set_in_cycle = 0;
  dev.state = 0;
  dev.g_prog = p.g_min;
  dev.t_prog = clock.now;
}

double noisy_read(double g_drifted, const DeviceModelParams& p,
                  const NoiseSource& noise, DeviceKey key, std::uint64_t read_index) {
  double g = g_drifted;
  const double sigma = p.effective_sigma_read();
  if (sigma != 0.0) {
    g += sigma * noise.gaussian(kSaltReadNoise, key.array_id, key.plane, key.row,
                                key.col, read_index);
  }
  return std::max(0.0, g);
}

namespace {

template <typename Device>
double read_impl(const Device& dev, const DeviceModelParams& p, double t,
                 const NoiseSource& noise, const DeviceKey& key,
                 std::uint64_t read_index) {
  return noisy_read(drifted_conductance(dev.g_prog, dev.t_prog, dev.nu, p, t), p,
                    noise, key, read_index);
}

}  // namespace

double read_analog(const MultiLevelDevice& dev, const DeviceModelParams& p,
                   double t, const NoiseSource& noise, DeviceKey key,
                   std::uint64_t read_index) {
  return read_impl(dev, p, t, noise, key, read_index);
}

double read_analog(const BinaryDevice& dev, const DeviceModelParams& p, double t,
                   const NoiseSource& noise, DeviceKey key, std::uint64_t read_index) {
  return read_impl(dev, p, t, noise, key, read_index);
}

void write_bit(BinaryDevice& dev, const DeviceModelParams& p, int bit,
               const SimClock& clock, const NoiseSource& noise, DeviceKey key) {
  const int target = bit ? 1 : 0;
  if (target == dev.state) return;
  if (target == 1) {
    dev.state = 1;
    dev.g_prog =
        std::clamp(p.g_high + write_noise_draw(p, noise, key, dev.events), p.g_min, p.g_max);
    dev.set_in_cycle = 1;  // the SET event opens a write-erase cycle
  } else {
    dev.state = 0;
    dev.g_prog = p.g_min;
    dev.cycles += 1;  // the erase closes it
    dev.set_in_cycle = 0;
  }
  dev.t_prog = clock.now;
  dev.nu = sample_nu(p, noise, key, dev.events);
  dev.flips += 1;
  dev.events += 1;
}

int read_bit(const BinaryDevice& dev, const DeviceModelParams& p, double t,
             const NoiseSource& noise, DeviceKey key, std::uint64_t read_index) {
  return read_analog(dev, p, t, noise, key, read_index) > p.g_threshold ? 1 : 0;
}

}  // namespace hicsim
