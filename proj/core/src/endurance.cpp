// SPDX-License-Identifier: Apache-2.0

#include "hicsim/endurance.hpp"

#include <map>
#include <tuple>

namespace hicsim {

namespace {

const HybridBackend* as_hybrid(const NetNode& n) {
  return n.backend ? dynamic_cast<const HybridBackend*>(n.backend.get()) : nullptr;
}

// Counters reconstructed for one device purely from its event stream.
struct ReplayedDevice {
  std::int64_t cycles = 0;
  std::int64_t events = 0;
  std::int64_t flips = 0;        // binary planes only
  int set_in_cycle = 0;
};

using ReplayKey = std::tuple<std::uint32_t, std::uint16_t, std::uint16_t, std::uint8_t>;

}  // namespace

EnduranceReport endurance_report(const Network& net, double limit) {
  EnduranceReport rep;
  rep.limit = limit;
  for (int k = 0; k < net.size(); ++k) {
    const HybridBackend* hb = as_hybrid(net.node(k));
    if (!hb) continue;
    const HybridWeightMatrix& m = hb->matrix();
    ArrayEndurance a;
    a.node = k;
    a.array_id = m.array_id();
    a.rows = m.rows();
    a.cols = m.cols();
    double msb_sum = 0.0;
    double lsb_sum = 0.0;
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        for (const MultiLevelDevice* d : {&m.plus(i, j), &m.minus(i, j)}) {
          a.msb.devices += 1;
          a.msb.total_events += d->events;
          msb_sum += static_cast<double>(d->cycles);
          if (d->cycles > a.msb.max_cycles) a.msb.max_cycles = d->cycles;
        }
        for (int p = 0; p < m.scheme().lsb_bits; ++p) {
          const BinaryDevice& d = m.plane(p, i, j);
          a.lsb.devices += 1;
          a.lsb.total_events += d.events;
          lsb_sum += static_cast<double>(d.cycles);
          if (d.cycles > a.lsb.max_cycles) a.lsb.max_cycles = d.cycles;
        }
      }
    if (a.msb.devices > 0) a.msb.mean_cycles = msb_sum / static_cast<double>(a.msb.devices);
    if (a.lsb.devices > 0) a.lsb.mean_cycles = lsb_sum / static_cast<double>(a.lsb.devices);
    rep.arrays.push_back(a);
  }
  for (const ArrayEndurance& a : rep.arrays) {
    if (a.msb.max_cycles > rep.max_msb_cycles) rep.max_msb_cycles = a.msb.max_cycles;
    if (a.lsb.max_cycles > rep.max_lsb_cycles) rep.max_lsb_cycles = a.lsb.max_cycles;
  }
  rep.max_cycles = std::max(rep.max_msb_cycles, rep.max_lsb_cycles);
  rep.max_fraction = limit > 0.0 ? static_cast<double>(rep.max_cycles) / limit : 0.0;
  return rep;
}

CsvTable endurance_table(const EnduranceReport& r) {
  CsvTable t({"node", "array_id", "rows", "cols", "msb_devices", "msb_max_cycles",
              "msb_mean_cycles", "msb_events", "lsb_devices", "lsb_max_cycles",
              "lsb_mean_cycles", "lsb_events", "max_fraction_of_limit"});
  for (const ArrayEndurance& a : r.arrays) {
    const std::int64_t worst = std::max(a.msb.max_cycles, a.lsb.max_cycles);
    const double frac = r.limit > 0.0 ? static_cast<double>(worst) / r.limit : 0.0;
    t.add_row({std::to_string(a.node), std::to_string(a.array_id),
               std::to_string(a.rows), std::to_string(a.cols),
               std::to_string(a.msb.devices), std::to_string(a.msb.max_cycles),
               format_double(a.msb.mean_cycles), std::to_string(a.msb.total_events),
               std::to_string(a.lsb.devices), std::to_string(a.lsb.max_cycles),
               format_double(a.lsb.mean_cycles), std::to_string(a.lsb.total_events),
               format_double(frac)});
  }
  return t;
}

std::string endurance_summary_text(const EnduranceReport& r) {
  std::string out;
  out += "endurance_limit_cycles = " + format_double(r.limit) + "\n";
  out += "arrays = " + std::to_string(r.arrays.size()) + "\n";
  out += "max_msb_cycles = " + std::to_string(r.max_msb_cycles) + "\n";
  out += "max_lsb_cycles = " + std::to_string(r.max_lsb_cycles) + "\n";
  out += "max_cycles = " + std::to_string(r.max_cycles) + "\n";
  out += "max_fraction_of_limit = " + format_double(r.max_fraction) + "\n";
  return out;
}

bool replay_matches(const Network& net, const std::vector<DeviceEvent>& events,
                    std::string* why) {
  // Cycle accounting mirrors the device primitives: a SET pulse rolls the
  // cycle counter after pulses_per_cycle pulses; a RESET closes any open
  // cycle; binary flips open (set) and close (clear) a cycle per transition.
  std::map<std::uint32_t, int> ppc;  // array_id -> pulses_per_cycle
  for (int k = 0; k < net.size(); ++k) {
    const HybridBackend* hb = as_hybrid(net.node(k));
    if (hb) ppc[hb->matrix().array_id()] = hb->matrix().params().pulses_per_cycle;
  }

  std::map<ReplayKey, ReplayedDevice> replayed;
  int bad = 0;
  auto complain = [&](const std::string& msg) {
    if (why && bad < 8) *why += msg + "\n";
    ++bad;
  };

  for (const DeviceEvent& e : events) {
    const auto it = ppc.find(e.array_id);
    if (it == ppc.end()) {
      complain("event for unknown array " + std::to_string(e.array_id));
      continue;
    }
    ReplayedDevice& d = replayed[{e.array_id, e.row, e.col, e.plane}];
    switch (e.op) {
      case DeviceOp::kSetPulse:
        d.events += 1;
        d.set_in_cycle += 1;
        if (d.set_in_cycle > it->second) {
          d.cycles += 1;
          d.set_in_cycle = 1;
        }
        break;
      case DeviceOp::kReset:
        if (d.set_in_cycle > 0) d.cycles += 1;
        d.set_in_cycle = 0;
        break;
      case DeviceOp::kBitSet:
        d.events += 1;
        d.flips += 1;
        d.set_in_cycle = 1;
        break;
      case DeviceOp::kBitClear:
        d.events += 1;
        d.flips += 1;
        d.cycles += 1;
        d.set_in_cycle = 0;
        break;
    }
  }

  auto check = [&](std::uint32_t array, int i, int j, std::uint8_t plane,
                   std::int64_t cycles, std::int64_t ev, std::int64_t flips,
                   bool binary) {
    ReplayedDevice d;  // devices with no events stay at zero
    const auto it = replayed.find(ReplayKey{array, static_cast<std::uint16_t>(i),
                                            static_cast<std::uint16_t>(j), plane});
    if (it != replayed.end()) {
      d = it->second;
      replayed.erase(it);
    }
    const std::string id = "array " + std::to_string(array) + " (" +
                           std::to_string(i) + "," + std::to_string(j) +
                           ") plane " + std::to_string(static_cast<int>(plane));
    if (d.cycles != cycles)
      complain(id + ": cycles " + std::to_string(cycles) + " != replayed " +
               std::to_string(d.cycles));
    if (d.events != ev)
      complain(id + ": events " + std::to_string(ev) + " != replayed " +
               std::to_string(d.events));
    if (binary && d.flips != flips)
      complain(id + ": flips " + std::to_string(flips) + " != replayed " +
               std::to_string(d.flips));
  };

  for (int k = 0; k < net.size(); ++k) {
    const HybridBackend* hb = as_hybrid(net.node(k));
    if (!hb) continue;
    const HybridWeightMatrix& m = hb->matrix();
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        check(m.array_id(), i, j, 0, m.plus(i, j).cycles, m.plus(i, j).events, 0,
              false);
        check(m.array_id(), i, j, 1, m.minus(i, j).cycles, m.minus(i, j).events, 0,
              false);
        for (int p = 0; p < m.scheme().lsb_bits; ++p) {
          const BinaryDevice& d = m.plane(p, i, j);
          check(m.array_id(), i, j, static_cast<std::uint8_t>(2 + p), d.cycles,
                d.events, d.flips, true);
        }
      }
  }

  for (const auto& [key, d] : replayed)
    complain("events for device outside any array: array " +
             std::to_string(std::get<0>(key)));

  return bad == 0;
}

}  // namespace hicsim
