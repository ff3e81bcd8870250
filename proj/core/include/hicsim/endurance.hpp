// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_ENDURANCE_HPP
#define HICSIM_ENDURANCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hicsim/event_log.hpp"
#include "hicsim/metrics.hpp"
#include "hicsim/nn.hpp"

namespace hicsim {

// Write-erase cycle statistics for one device class of one array.
struct EnduranceSummary {
  std::int64_t devices = 0;
  std::int64_t max_cycles = 0;
  double mean_cycles = 0.0;
  std::int64_t total_events = 0;  // programming events across the class
};

struct ArrayEndurance {
  int node = 0;  // network node index
  std::uint32_t array_id = 0;
  int rows = 0;
  int cols = 0;
  EnduranceSummary msb;  // differential-pair devices (2 per weight)
  EnduranceSummary lsb;  // bit-plane devices (lsb_bits per weight)
};

// Wear summary over every hybrid array of a network, against a device
// endurance limit in write-erase cycles.
struct EnduranceReport {
  double limit = 1e8;
  std::vector<ArrayEndurance> arrays;
  std::int64_t max_msb_cycles = 0;
  std::int64_t max_lsb_cycles = 0;
  std::int64_t max_cycles = 0;
  double max_fraction = 0.0;  // max_cycles / limit
};

EnduranceReport endurance_report(const Network& net, double limit = 1e8);

// One row per array: node, array_id, rows, cols, per-class device counts,
// max/mean cycles, programming events, and fraction of the limit.
CsvTable endurance_table(const EnduranceReport& r);

// Human-readable key = value digest (global maxima and margin).
std::string endurance_summary_text(const EnduranceReport& r);

// Independent wear accounting: re-derives every device's pulse, flip, and
// cycle counters from the programming-event stream alone and compares them
// against the live device state. Returns true when all counters match;
// otherwise appends a description of the first mismatches to `why`.
bool replay_matches(const Network& net, const std::vector<DeviceEvent>& events,
                    std::string* why = nullptr);

}  // namespace hicsim

#endif  // HICSIM_ENDURANCE_HPP
