// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_QUANT_HPP
#define HICSIM_QUANT_HPP

#include "hicsim/device.hpp"

namespace hicsim {

// Read mode for weight decode paths: kIdeal returns the last programmed
// conductances (no drift, no noise), kNoisy goes through the full device
// read model.
enum class ReadMode { kIdeal, kNoisy };

// Fixed-point weight representation. A weight is
//   w = level * delta_msb + acc * delta_lsb
// with level in [-levels, +levels] held on the differential pair and acc a
// signed lsb_bits accumulator on the bit planes. Full accumulator scale
// equals exactly one MSB step, so one overflow carries one level.
struct QuantScheme {
  double w_max = 1.0;    // representable weight magnitude
  int levels = 7;        // L: signed MSB level range, 2L+1 levels total
  int lsb_bits = 7;      // accumulator width (signed)
  double g_unit = 1.25;  // conductance per MSB level (uS/level)

  double delta_msb() const { return w_max / static_cast<double>(levels); }
  int acc_half() const { return 1 << (lsb_bits - 1); }
  int acc_min() const { return -acc_half(); }
  int acc_max() const { return acc_half() - 1; }
  double delta_lsb() const { return delta_msb() / static_cast<double>(acc_half()); }

  void validate(const DeviceModelParams& dev) const;
};

}  // namespace hicsim

#endif  // HICSIM_QUANT_HPP
