// SPDX-License-Identifier: Apache-2.0
//
// Backend configuration whose scale factors are all powers of two, so the
// analog forward path (sum of x*Gdiff, then one scale) and the digital
// fixed-point path (sum of x*level*delta_msb) round identically in IEEE
// arithmetic. With every non-ideality off and converters bypassed, the
// hybrid trainer and the fixed-point twin must produce bit-equal
// trajectories.

#ifndef HICSIM_TESTS_SHADOW_CONFIG_HPP
#define HICSIM_TESTS_SHADOW_CONFIG_HPP

#include "hicsim/backend.hpp"

namespace hicsim_test {

inline hicsim::BackendConfig shadow_config(hicsim::BackendConfig::Kind kind,
                                           std::uint64_t seed) {
  hicsim::BackendConfig cfg;
  cfg.kind = kind;
  cfg.seed = seed;
  cfg.scheme.w_max = 0.875;  // delta_msb = 1/8
  cfg.scheme.g_unit = 2.0;
  cfg.device.g_min = 0.0;
  cfg.device.delta_lin = 2.0;  // one SET pulse per level
  cfg.device.nonlinear_prog = false;
  cfg.device.write_noise = false;
  cfg.device.read_noise = false;
  cfg.device.drift = false;
  cfg.crossbar.converter.enabled = false;
  return cfg;
}

}  // namespace hicsim_test

#endif  // HICSIM_TESTS_SHADOW_CONFIG_HPP
