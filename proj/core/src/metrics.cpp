// SPDX-License-Identifier: Apache-2.0

#include "hicsim/metrics.hpp"

#include <cstdio>

namespace hicsim {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path);
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), fp);
  const bool short_write = n != text.size();
  if (std::fclose(fp) != 0 || short_write)
    throw IoError("write failure: " + path);
}

std::string read_text_file(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open: " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), fp)) > 0) text.append(buf, n);
  const bool bad = std::ferror(fp) != 0;
  std::fclose(fp);
  if (bad) throw IoError("read failure: " + path);
  return text;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::logic_error("csv: empty header");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw std::logic_error("csv: row arity " + std::to_string(cells.size()) +
                           " != header arity " + std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

CsvTable metrics_table(const std::vector<MetricsRecord>& records) {
  CsvTable t({"run_id", "epoch", "step", "sim_time_s", "lr", "train_loss",
              "train_acc", "test_loss", "test_acc", "flips", "carries", "clamps",
              "tick_clips", "msb_pulses", "forced_refreshes", "sweep_refreshes"});
  for (const MetricsRecord& r : records) {
    t.add_row({std::to_string(r.run_id), std::to_string(r.epoch),
               std::to_string(r.step), format_double(r.sim_time), format_double(r.lr),
               format_double(r.train_loss), format_double(r.train_acc),
               format_double(r.test_loss), format_double(r.test_acc),
               std::to_string(r.stats.flips), std::to_string(r.stats.carries),
               std::to_string(r.stats.clamps), std::to_string(r.stats.tick_clips),
               std::to_string(r.stats.msb_pulses), std::to_string(r.stats.refreshes),
               std::to_string(r.refreshes)});
  }
  return t;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  return metrics_table(records).to_string();
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records) {
  write_text_file(path, metrics_csv(records));
}

}  // namespace hicsim
