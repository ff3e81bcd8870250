// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_EVENT_LOG_HPP
#define HICSIM_EVENT_LOG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hicsim {

enum class DeviceOp : std::uint8_t {
  kSetPulse = 0,  // one SET pulse on a multi-level device
  kReset = 1,     // RESET pulse on a multi-level device
  kBitSet = 2,    // 0 -> 1 flip on a binary device
  kBitClear = 3,  // 1 -> 0 flip on a binary device
};

// 8-byte programming event record. plane 0/1 address the G+/G- halves of a
// differential pair; planes 2.. address the LSB bit planes.
struct DeviceEvent {
  std::uint32_t array_id = 0;
  std::uint16_t row = 0;
  std::uint16_t col = 0;
  std::uint8_t plane = 0;
  DeviceOp op = DeviceOp::kSetPulse;
};

// Append-only log of all programming events in a run. Reads are never
// logged. Disabled logs drop records so tight loops stay cheap.
class EventLog {
 public:
  explicit EventLog(bool enabled = false) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void set_enabled(bool on) { enabled_ = on; }

  void record(std::uint32_t array_id, std::uint16_t row, std::uint16_t col,
              std::uint8_t plane, DeviceOp op) {
    if (!enabled_) return;
    events_.push_back(DeviceEvent{array_id, row, col, plane, op});
  }

  const std::vector<DeviceEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  void clear() { events_.clear(); }

  // Compact binary serialization with a versioned header.
  void save(const std::string& path) const;
  static std::vector<DeviceEvent> load(const std::string& path);

  // One event per line, for inspection without bespoke tooling.
  static void export_text(const std::vector<DeviceEvent>& events, std::ostream& out);

 private:
  bool enabled_;
  std::vector<DeviceEvent> events_;
};

}  // namespace hicsim

#endif  // HICSIM_EVENT_LOG_HPP
