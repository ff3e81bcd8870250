// SPDX-License-Identifier: Apache-2.0

#include "hicsim/quant.hpp"

#include <stdexcept>
#include <string>

namespace hicsim {

void QuantScheme::validate(const DeviceModelParams& dev) const {
  if (w_max <= 0.0) throw std::invalid_argument("quant: w_max must be > 0");
  if (levels < 1) throw std::invalid_argument("quant: levels must be >= 1");
  if (lsb_bits < 2 || lsb_bits > 16)
    throw std::invalid_argument("quant: lsb_bits must be in [2, 16]");
  if (g_unit <= 0.0) throw std::invalid_argument("quant: g_unit must be > 0");
  const double span = static_cast<double>(levels) * g_unit;
  if (dev.g_min + span > dev.g_max)
    throw std::invalid_argument("quant: level span exceeds conductance window (levels * g_unit = " +
                                std::to_string(span) + " > g_max - g_min)");
}

}  // namespace hicsim
