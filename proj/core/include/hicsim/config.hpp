// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_CONFIG_HPP
#define HICSIM_CONFIG_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "hicsim/backend.hpp"
#include "hicsim/dataset.hpp"
#include "hicsim/trainer.hpp"

namespace hicsim {

// Raised for malformed config text, unknown keys, or invalid values. The
// message carries the 1-based line number when one applies.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Complete description of one experiment: device physics, weight encoding,
// programming policy, crossbar geometry, converters, network architecture,
// training schedule, data source, and study-level sweep settings.
//
// Serializes to a flat "section.key = value" text format and parses back
// losslessly: serialize(parse(serialize(cfg))) == serialize(cfg).
struct ExperimentConfig {
  DeviceModelParams device;
  QuantScheme scheme;
  ProgramPolicy policy;
  CrossbarParams crossbar;  // includes converter params

  // Architecture string, e.g. "dense:32 relu dense:32 relu dense:2".
  std::string arch = "dense:32 relu dense:32 relu dense:2";
  // Weight storage engine: "hybrid", "fixed-point", or "fp32".
  std::string backend = "hybrid";
  // Device read path during training/eval: "noisy" or "ideal".
  std::string mode = "noisy";
  // Record per-device programming events (needed for endurance replay).
  bool event_log = false;

  TrainingConfig training;  // includes the gradient quantizer
  DatasetSource dataset;    // dataset.seed is independent of training.seed

  // Drift study: inference times (s) after training ends.
  std::vector<double> sweep_times = {1e2, 1e4, 1e6, 4e7};
  int sweep_training_runs = 3;   // independently seeded training runs
  int sweep_inference_runs = 3;  // read-noise repetitions per time point
  int ablation_seeds = 5;        // seeds per ablation row

  void validate() const;  // throws ConfigError on any invalid setting

  BackendConfig::Kind backend_kind() const;  // parses `backend`
  ReadMode read_mode() const;                // parses `mode`

  // Assemble the per-network backend settings from this config.
  BackendConfig backend_config(EventLog* log = nullptr) const;
};

// All registered keys, in serialization order.
std::vector<std::string> config_keys();

// Set one field by key. Throws ConfigError on unknown key or bad value.
void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

// Read one field by key as its serialized string form.
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

// Parse "key = value" lines. '#' starts a comment; blank lines are skipped.
// Unknown keys, duplicate keys, and malformed lines raise ConfigError with
// the line number. Unmentioned keys keep their defaults.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config_file(const std::string& path);

// Emit every key in a stable order with '%.17g' doubles, so parsing the
// output reproduces the config exactly.
std::string serialize_config(const ExperimentConfig& cfg);

void save_config_file(const std::string& path, const ExperimentConfig& cfg);

}  // namespace hicsim

#endif  // HICSIM_CONFIG_HPP
