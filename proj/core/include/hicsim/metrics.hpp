// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_METRICS_HPP
#define HICSIM_METRICS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hicsim/trainer.hpp"

namespace hicsim {

// Raised for file-system failures (missing paths, short writes).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// '%.17g': shortest form that still round-trips the double exactly.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Minimal fixed-arity CSV builder: one header, uniform rows, '\n' endings.
// Values must not contain commas or newlines (all producers emit plain
// numbers and identifiers).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);  // throws std::logic_error on arity mismatch
  std::size_t rows() const { return rows_.size(); }
  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Per-epoch training metrics, one row per record:
//   run_id, epoch, step, sim_time_s, lr, train_loss, train_acc, test_loss,
//   test_acc, flips, carries, clamps, tick_clips, msb_pulses,
//   forced_refreshes, sweep_refreshes
// Device counters are cumulative from the start of the run. No wall-clock
// columns: reruns must be byte-identical.
CsvTable metrics_table(const std::vector<MetricsRecord>& records);

std::string metrics_csv(const std::vector<MetricsRecord>& records);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records);

}  // namespace hicsim

#endif  // HICSIM_METRICS_HPP
