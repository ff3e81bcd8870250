// SPDX-License-Identifier: Apache-2.0

#include "hicsim/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hicsim/rng.hpp"

namespace hicsim {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Key space: (salt, split, class, sample, component) with split 0 = train,
// 1 = test, so the two sets never share draws.
void gen_gaussians(const DatasetSource& src, int split, Tensor& x, std::vector<int>& y) {
  const NoiseSource ns(src.seed);
  const int per = split == 0 ? src.train_per_class : src.test_per_class;
  const int n = per * src.classes;
  x = Tensor(std::vector<int>{n, 2});
  y.assign(static_cast<std::size_t>(n), 0);
  int row = 0;
  for (int c = 0; c < src.classes; ++c) {
    const double ang = kTau * c / src.classes;
    const double mx = 1.5 * std::cos(ang);
    const double my = 1.5 * std::sin(ang);
    for (int i = 0; i < per; ++i, ++row) {
      double* p = x.sample(row);
      p[0] = mx + src.noise * ns.gaussian(kSaltDataset, split, c, i, 0);
      p[1] = my + src.noise * ns.gaussian(kSaltDataset, split, c, i, 1);
      y[static_cast<std::size_t>(row)] = c;
    }
  }
}

// Interleaved spiral arms: radius sweeps 0.2..1 over 1.75 turns, one arm per
// class offset by 1/K turn, gaussian jitter on both coordinates.
void gen_spirals(const DatasetSource& src, int split, Tensor& x, std::vector<int>& y) {
  const NoiseSource ns(src.seed);
  const int per = split == 0 ? src.train_per_class : src.test_per_class;
  const int n = per * src.classes;
  x = Tensor(std::vector<int>{n, 2});
  y.assign(static_cast<std::size_t>(n), 0);
  int row = 0;
  for (int c = 0; c < src.classes; ++c) {
    for (int i = 0; i < per; ++i, ++row) {
      const double t = ns.uniform(kSaltDataset, split, c, i, 2);
      const double r = 0.2 + 0.8 * t;
      const double theta = kTau * (1.75 * t + static_cast<double>(c) / src.classes);
      double* p = x.sample(row);
      p[0] = r * std::cos(theta) + src.noise * ns.gaussian(kSaltDataset, split, c, i, 0);
      p[1] = r * std::sin(theta) + src.noise * ns.gaussian(kSaltDataset, split, c, i, 1);
      y[static_cast<std::size_t>(row)] = c;
    }
  }
}

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f)
    throw std::runtime_error("idx: truncated read at offset " + std::to_string(offset) +
                             " in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void read_idx_split(const std::string& images, const std::string& labels, bool normalize,
                    Tensor& x, std::vector<int>& y) {
  std::ifstream fi(images, std::ios::binary);
  if (!fi) throw std::runtime_error("idx: cannot open " + images);
  const std::uint32_t magic_i = read_be32(fi, images, 0);
  if (magic_i != 0x00000803u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "0x%08X", magic_i);
    throw std::runtime_error("idx: bad image magic " + std::string(buf) +
                             " at offset 0 in " + images + " (want 0x00000803)");
  }
  const std::uint32_t count = read_be32(fi, images, 4);
  const std::uint32_t rows = read_be32(fi, images, 8);
  const std::uint32_t cols = read_be32(fi, images, 12);
  const std::size_t pixels = static_cast<std::size_t>(count) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  fi.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
  if (!fi)
    throw std::runtime_error("idx: truncated image data at offset " +
                             std::to_string(16 + fi.gcount()) + " in " + images);

  std::ifstream fl(labels, std::ios::binary);
  if (!fl) throw std::runtime_error("idx: cannot open " + labels);
  const std::uint32_t magic_l = read_be32(fl, labels, 0);
  if (magic_l != 0x00000801u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "0x%08X", magic_l);
    throw std::runtime_error("idx: bad label magic " + std::string(buf) +
                             " at offset 0 in " + labels + " (want 0x00000801)");
  }
  const std::uint32_t lcount = read_be32(fl, labels, 4);
  if (lcount != count)
    throw std::runtime_error("idx: image/label count mismatch (" + std::to_string(count) +
                             " vs " + std::to_string(lcount) + ")");
  std::vector<unsigned char> lab(count);
  fl.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(count));
  if (!fl)
    throw std::runtime_error("idx: truncated label data at offset " +
                             std::to_string(8 + fl.gcount()) + " in " + labels);

  x = Tensor(std::vector<int>{static_cast<int>(count), 1, static_cast<int>(rows),
                              static_cast<int>(cols)});
  for (std::size_t i = 0; i < pixels; ++i)
    x.v[i] = normalize ? raw[i] / 255.0 - 0.5 : static_cast<double>(raw[i]);
  y.assign(count, 0);
  for (std::uint32_t i = 0; i < count; ++i) y[i] = static_cast<int>(lab[i]);
}

void read_csv_split(const std::string& path, Tensor& x, std::vector<int>& y) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("csv: bad number '" + cell + "' at line " +
                                 std::to_string(lineno) + " in " + path);
      }
    }
    if (vals.size() < 2)
      throw std::runtime_error("csv: line " + std::to_string(lineno) + " in " + path +
                               " needs a label and at least one feature");
    if (!rows.empty() && vals.size() != rows.front().size() + 1)
      throw std::runtime_error("csv: ragged row at line " + std::to_string(lineno) +
                               " in " + path);
    const double lv = vals.front();
    const int lab = static_cast<int>(lv);
    if (lab < 0 || static_cast<double>(lab) != lv)
      throw std::runtime_error("csv: label must be a non-negative integer at line " +
                               std::to_string(lineno) + " in " + path);
    labels.push_back(lab);
    vals.erase(vals.begin());
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows in " + path);
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.front().size());
  x = Tensor(std::vector<int>{n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      x.sample(i)[j] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  y = std::move(labels);
}

int max_label(const std::vector<int>& a, const std::vector<int>& b) {
  int m = 0;
  for (int v : a) m = std::max(m, v);
  for (int v : b) m = std::max(m, v);
  return m;
}

}  // namespace

void DatasetSource::validate() const {
  if (classes < 2) throw std::invalid_argument("dataset: classes must be >= 2");
  if (noise < 0.0) throw std::invalid_argument("dataset: noise must be >= 0");
  switch (kind) {
    case Kind::kSyntheticGaussians:
    case Kind::kSyntheticSpirals:
      if (train_per_class < 1 || test_per_class < 1)
        throw std::invalid_argument("dataset: per-class counts must be >= 1");
      break;
    case Kind::kImageIdx:
      if (train_images.empty() || train_labels.empty() || test_images.empty() ||
          test_labels.empty())
        throw std::invalid_argument("dataset: image-idx needs all four file paths");
      break;
    case Kind::kCsv:
      if (train_csv.empty() || test_csv.empty())
        throw std::invalid_argument("dataset: csv needs train and test paths");
      break;
  }
}

const char* dataset_kind_name(DatasetSource::Kind k) {
  switch (k) {
    case DatasetSource::Kind::kSyntheticGaussians: return "synthetic-gaussians";
    case DatasetSource::Kind::kSyntheticSpirals: return "synthetic-spirals";
    case DatasetSource::Kind::kImageIdx: return "image-idx";
    case DatasetSource::Kind::kCsv: return "csv";
  }
  return "?";
}

DatasetSource::Kind dataset_kind_from_name(const std::string& name) {
  if (name == "synthetic-gaussians") return DatasetSource::Kind::kSyntheticGaussians;
  if (name == "synthetic-spirals") return DatasetSource::Kind::kSyntheticSpirals;
  if (name == "image-idx") return DatasetSource::Kind::kImageIdx;
  if (name == "csv") return DatasetSource::Kind::kCsv;
  throw std::invalid_argument("dataset: unknown kind '" + name + "'");
}

Dataset load_dataset(const DatasetSource& source) {
  source.validate();
  Dataset ds;
  switch (source.kind) {
    case DatasetSource::Kind::kSyntheticGaussians:
      gen_gaussians(source, 0, ds.train_x, ds.train_y);
      gen_gaussians(source, 1, ds.test_x, ds.test_y);
      ds.classes = source.classes;
      break;
    case DatasetSource::Kind::kSyntheticSpirals:
      gen_spirals(source, 0, ds.train_x, ds.train_y);
      gen_spirals(source, 1, ds.test_x, ds.test_y);
      ds.classes = source.classes;
      break;
    case DatasetSource::Kind::kImageIdx:
      read_idx_split(source.train_images, source.train_labels, source.normalize,
                     ds.train_x, ds.train_y);
      read_idx_split(source.test_images, source.test_labels, source.normalize, ds.test_x,
                     ds.test_y);
      ds.classes = std::max(source.classes, max_label(ds.train_y, ds.test_y) + 1);
      break;
    case DatasetSource::Kind::kCsv:
      read_csv_split(source.train_csv, ds.train_x, ds.train_y);
      read_csv_split(source.test_csv, ds.test_x, ds.test_y);
      if (ds.train_x.shape[1] != ds.test_x.shape[1])
        throw std::runtime_error("csv: train/test feature widths differ");
      ds.classes = std::max(source.classes, max_label(ds.train_y, ds.test_y) + 1);
      break;
  }
  return ds;
}

void write_csv(const std::string& path, const Tensor& x, const std::vector<int>& y) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("csv: cannot write " + path);
  const int n = x.batch();
  const long long d = x.sample_size();
  for (int i = 0; i < n; ++i) {
    std::fprintf(f, "%d", y[static_cast<std::size_t>(i)]);
    const double* p = x.sample(i);
    for (long long j = 0; j < d; ++j) std::fprintf(f, ",%.17g", p[j]);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace hicsim
