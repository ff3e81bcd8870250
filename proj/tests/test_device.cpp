// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "hicsim/device.hpp"

using namespace hicsim;

namespace {

DeviceModelParams quiet_params() {
  DeviceModelParams p;
  p.write_noise = false;
  p.read_noise = false;
  p.drift = false;
  return p;
}

}  // namespace

TEST_SUITE("device") {

TEST_CASE("parameter validation rejects bad windows") {
  DeviceModelParams p;
  CHECK_NOTHROW(p.validate());
  p.g_min = 30.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DeviceModelParams{};
  p.delta0 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DeviceModelParams{};
  p.t0 = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DeviceModelParams{};
  p.pulses_per_cycle = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("noise-free programming follows the harmonic curve") {
  // Oracle: after k pulses from RESET the conductance is
  //   min(g_max, g_min + delta0 * (1 + 1/2 + ... + 1/k)),
  // summed independently in long double and descending order.
  DeviceModelParams p = quiet_params();
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  NoiseSource noise(1);
  const DeviceKey key{0, 0, 0, 0};

  for (int k = 1; k <= 100; ++k) {
    set_pulse(dev, p, clock, noise, key);
    long double h = 0.0L;
    for (int n = k; n >= 1; --n) h += 1.0L / static_cast<long double>(n);
    const double expected =
        std::min(static_cast<long double>(p.g_max),
                 static_cast<long double>(p.g_min) +
                     static_cast<long double>(p.delta0) * h);
    CHECK(std::abs(dev.g_prog - static_cast<double>(expected)) <= 1e-12);
  }
}

TEST_CASE("linear programming adds a constant step") {
  DeviceModelParams p = quiet_params();
  p.nonlinear_prog = false;
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  NoiseSource noise(1);
  const DeviceKey key{0, 0, 0, 0};
  for (int k = 1; k <= 10; ++k) {
    set_pulse(dev, p, clock, noise, key);
    CHECK(dev.g_prog == doctest::Approx(p.g_min + k * p.delta_lin).epsilon(1e-12));
  }
}

TEST_CASE("conductance clamps at g_max") {
  DeviceModelParams p = quiet_params();
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  NoiseSource noise(1);
  const DeviceKey key{0, 0, 0, 0};
  for (int k = 0; k < 5000; ++k) set_pulse(dev, p, clock, noise, key);
  CHECK(dev.g_prog == p.g_max);
}

TEST_CASE("drift follows the closed-form power law over nine decades") {
  DeviceModelParams p;
  p.write_noise = false;
  p.read_noise = false;
  p.nu_sigma = 0.0;  // pin nu at the mean
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  NoiseSource noise(3);
  const DeviceKey key{0, 1, 2, 0};
  set_pulse(dev, p, clock, noise, key);
  REQUIRE(dev.nu == doctest::Approx(0.05).epsilon(1e-15));

  const double g0 = dev.g_prog;
  for (double logt = 0.0; logt <= 9.0; logt += 0.25) {
    const double t = std::pow(10.0, logt) * p.t0;
    // Independent formulation via exp/log.
    const double expected =
        g0 * std::exp(-dev.nu * std::log((t - dev.t_prog + p.t0) / p.t0));
    const double got = read_analog(dev, p, t, noise, key, 0);
    CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("drift restarts at each programming event") {
  DeviceModelParams p;
  p.write_noise = false;
  p.read_noise = false;
  p.nu_sigma = 0.0;
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  NoiseSource noise(3);
  const DeviceKey key{0, 0, 0, 0};
  set_pulse(dev, p, clock, noise, key);
  clock.advance_to(1000.0);
  set_pulse(dev, p, clock, noise, key);
  CHECK(dev.t_prog == 1000.0);
  // Immediately after programming the read returns g_prog exactly.
  CHECK(read_analog(dev, p, 1000.0, noise, key, 0) == dev.g_prog);
}

TEST_CASE("reads before the last programming time are a logic error") {
  DeviceModelParams p = quiet_params();
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  clock.advance_to(10.0);
  NoiseSource noise(1);
  set_pulse(dev, p, clock, noise, DeviceKey{});
  CHECK_THROWS_AS(read_analog(dev, p, 5.0, noise, DeviceKey{}, 0), std::logic_error);
  CHECK_THROWS_AS(clock.advance_to(1.0), std::logic_error);
}

TEST_CASE("binary bit decay crossing matches the analytic time") {
  DeviceModelParams p;
  p.write_noise = false;
  p.read_noise = false;
  p.nu_sigma = 0.0;
  BinaryDevice dev = make_binary_device(p);
  SimClock clock;
  NoiseSource noise(5);
  const DeviceKey key{0, 0, 0, 2};
  write_bit(dev, p, 1, clock, noise, key);
  REQUIRE(dev.g_prog == p.g_high);
  REQUIRE(dev.nu == doctest::Approx(0.05).epsilon(1e-15));

  // Analytic crossing: g_high * ((t + t0)/t0)^(-nu) = g_threshold
  const double t_star =
      p.t0 * std::pow(p.g_high / p.g_threshold, 1.0 / dev.nu) - p.t0;

  // Log sweep; the first step reading 0 must bracket t_star.
  const int kSteps = 400;
  const double lo = 0.0, hi = 14.0;  // 10^0 .. 10^14 s
  double prev_t = 0.0;
  bool crossed = false;
  for (int s = 0; s <= kSteps; ++s) {
    const double t = std::pow(10.0, lo + (hi - lo) * s / kSteps);
    if (read_bit(dev, p, t, noise, key, static_cast<std::uint64_t>(s)) == 0) {
      CHECK(prev_t <= t_star);
      CHECK(t_star <= t);
      crossed = true;
      break;
    }
    prev_t = t;
  }
  CHECK(crossed);
}

TEST_CASE("cycle accounting: k SETs plus RESET costs ceil(k/10) cycles") {
  DeviceModelParams p = quiet_params();
  SimClock clock;
  NoiseSource noise(1);
  const DeviceKey key{0, 0, 0, 0};
  for (int k : {1, 5, 10, 11, 20, 25, 37, 100}) {
    MultiLevelDevice dev = make_multi_level_device(p);
    for (int i = 0; i < k; ++i) set_pulse(dev, p, clock, noise, key);
    reset(dev, p, clock);
    CHECK(dev.cycles == (k + p.pulses_per_cycle - 1) / p.pulses_per_cycle);
    CHECK(dev.n_set == 0);
    CHECK(dev.g_prog == p.g_min);
  }
}

TEST_CASE("reset of an already-reset device is free") {
  DeviceModelParams p = quiet_params();
  MultiLevelDevice dev = make_multi_level_device(p);
  SimClock clock;
  reset(dev, p, clock);
  reset(dev, p, clock);
  CHECK(dev.cycles == 0);
}

TEST_CASE("binary write-erase accounting") {
  DeviceModelParams p = quiet_params();
  BinaryDevice dev = make_binary_device(p);
  SimClock clock;
  NoiseSource noise(1);
  const DeviceKey key{0, 0, 0, 2};

  write_bit(dev, p, 1, clock, noise, key);  // open cycle
  CHECK(dev.state == 1);
  CHECK(dev.cycles == 0);
  write_bit(dev, p, 1, clock, noise, key);  // no-op
  CHECK(dev.flips == 1);
  write_bit(dev, p, 0, clock, noise, key);  // erase closes the cycle
  CHECK(dev.state == 0);
  CHECK(dev.cycles == 1);
  CHECK(dev.flips == 2);
  write_bit(dev, p, 0, clock, noise, key);  // no-op
  CHECK(dev.flips == 2);
  CHECK(read_bit(dev, p, 0.0, noise, key, 0) == 0);
  write_bit(dev, p, 1, clock, noise, key);
  CHECK(read_bit(dev, p, 0.0, noise, key, 1) == 1);
}

TEST_CASE("write noise is reproducible per event index") {
  DeviceModelParams p;
  p.read_noise = false;
  p.drift = false;
  SimClock clock;
  NoiseSource noise(77);
  const DeviceKey key{1, 2, 3, 0};
  MultiLevelDevice a = make_multi_level_device(p);
  MultiLevelDevice b = make_multi_level_device(p);
  for (int i = 0; i < 20; ++i) {
    set_pulse(a, p, clock, noise, key);
    set_pulse(b, p, clock, noise, key);
    CHECK(a.g_prog == b.g_prog);
    CHECK(a.nu == b.nu);
  }
  // A different device key sees a different noise stream.
  MultiLevelDevice c = make_multi_level_device(p);
  set_pulse(c, p, clock, noise, DeviceKey{1, 2, 4, 0});
  CHECK(c.g_prog != a.g_prog);
}

TEST_CASE("reads are pure and keyed by read index") {
  DeviceModelParams p;
  p.drift = false;
  SimClock clock;
  NoiseSource noise(7);
  const DeviceKey key{0, 0, 0, 0};
  MultiLevelDevice dev = make_multi_level_device(p);
  set_pulse(dev, p, clock, noise, key);
  const double g_saved = dev.g_prog;
  const double r0 = read_analog(dev, p, 0.0, noise, key, 0);
  const double r0b = read_analog(dev, p, 0.0, noise, key, 0);
  const double r1 = read_analog(dev, p, 0.0, noise, key, 1);
  CHECK(r0 == r0b);
  CHECK(r0 != r1);
  CHECK(dev.g_prog == g_saved);
}

}  // TEST_SUITE
