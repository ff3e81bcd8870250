// SPDX-License-Identifier: Apache-2.0

#include "hicsim/event_log.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace hicsim {

namespace {

constexpr char kMagic[8] = {'H', 'I', 'C', 'E', 'V', 'T', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

const char* op_name(DeviceOp op) {
  switch (op) {
    case DeviceOp::kSetPulse: return "set";
    case DeviceOp::kReset: return "reset";
    case DeviceOp::kBitSet: return "bit_set";
    case DeviceOp::kBitClear: return "bit_clear";
  }
  return "?";
}

}  // namespace

void EventLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open event log for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t version = kVersion;
  std::uint64_t count = events_.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const DeviceEvent& e : events_) {
    std::array<char, 10> rec{};
    std::memcpy(rec.data(), &e.array_id, 4);
    std::memcpy(rec.data() + 4, &e.row, 2);
    std::memcpy(rec.data() + 6, &e.col, 2);
    rec[8] = static_cast<char>(e.plane);
    rec[9] = static_cast<char>(e.op);
    out.write(rec.data(), rec.size());
  }
  if (!out) throw std::runtime_error("write failure on event log: " + path);
}

std::vector<DeviceEvent> EventLog::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open event log: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad event log magic in " + path);
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || version != kVersion)
    throw std::runtime_error("unsupported event log version in " + path);
  std::vector<DeviceEvent> events;
  events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::array<char, 10> rec{};
    in.read(rec.data(), rec.size());
    if (!in) throw std::runtime_error("truncated event log: " + path);
    DeviceEvent e;
    std::memcpy(&e.array_id, rec.data(), 4);
    std::memcpy(&e.row, rec.data() + 4, 2);
    std::memcpy(&e.col, rec.data() + 6, 2);
    e.plane = static_cast<std::uint8_t>(rec[8]);
    e.op = static_cast<DeviceOp>(rec[9]);
    events.push_back(e);
  }
  return events;
}

void EventLog::export_text(const std::vector<DeviceEvent>& events, std::ostream& out) {
  out << "array_id,row,col,plane,op\n";
  for (const DeviceEvent& e : events) {
    out << e.array_id << ',' << e.row << ',' << e.col << ','
        << static_cast<int>(e.plane) << ',' << op_name(e.op) << '\n';
  }
}

}  // namespace hicsim
