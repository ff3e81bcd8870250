// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_SIM_CLOCK_HPP
#define HICSIM_SIM_CLOCK_HPP

#include <stdexcept>

namespace hicsim {

// Simulation wall clock. Time only moves forward; one tick per training
// batch by default.
struct SimClock {
  double now = 0.0;                // seconds
  double seconds_per_batch = 1.0;  // advance per training batch

  void advance_batch() { now += seconds_per_batch; }

  void advance_to(double t) {
    if (t < now) throw std::logic_error("SimClock: time must be non-decreasing");
    now = t;
  }
};

}  // namespace hicsim

#endif  // HICSIM_SIM_CLOCK_HPP
