// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_CHECKPOINT_HPP
#define HICSIM_CHECKPOINT_HPP

#include <stdexcept>
#include <string>

#include "hicsim/nn.hpp"
#include "hicsim/sim_clock.hpp"

namespace hicsim {

// Raised when a checkpoint file is malformed or does not match the network
// it is being restored into.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Serializes the full mutable state of a built network: every device of
// every hybrid array (conductances, drift exponents, pulse/cycle counters,
// event counts), bit-plane cells, per-array read/op/update sequence counters,
// converter clips and freeze flags, fixed-point or fp32 weights, batchnorm
// parameters and running statistics, and the simulation time.
//
// Reloading into a network built from the same config reproduces subsequent
// behavior bit for bit. Fixed-width little-endian binary layout.
void save_checkpoint(const std::string& path, const Network& net,
                     const SimClock& clock);

// Restores state saved by save_checkpoint into an identically built network.
// Returns the saved simulation time (assign it to SimClock::now). Throws
// CheckpointError when the file does not match the network's structure.
double load_checkpoint(const std::string& path, Network& net);

}  // namespace hicsim

#endif  // HICSIM_CHECKPOINT_HPP
