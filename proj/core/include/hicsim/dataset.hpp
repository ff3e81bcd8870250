// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_DATASET_HPP
#define HICSIM_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hicsim/tensor.hpp"

namespace hicsim {

// Where training data comes from. Synthetic kinds are generated from the
// seed alone; file kinds read idx (big-endian magic binary) or CSV
// (label,feature,...) pairs.
struct DatasetSource {
  enum class Kind { kSyntheticGaussians, kSyntheticSpirals, kImageIdx, kCsv };
  Kind kind = Kind::kSyntheticGaussians;
  int classes = 2;
  int train_per_class = 500;
  int test_per_class = 100;
  double noise = 0.15;  // spread of the synthetic clouds / spiral jitter
  std::uint64_t seed = 1;
  bool normalize = true;  // images: scale to [-0.5, 0.5]

  // image-idx kind
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  // csv kind
  std::string train_csv;
  std::string test_csv;

  void validate() const;
};

const char* dataset_kind_name(DatasetSource::Kind k);
DatasetSource::Kind dataset_kind_from_name(const std::string& name);

struct Dataset {
  Tensor train_x;
  std::vector<int> train_y;
  Tensor test_x;
  std::vector<int> test_y;
  int classes = 0;
};

// Deterministic given the source; train/test draws use disjoint key spaces.
Dataset load_dataset(const DatasetSource& source);

// Write a split as CSV rows "label,x0,x1,...". Used by `dataset gen`.
void write_csv(const std::string& path, const Tensor& x, const std::vector<int>& y);

}  // namespace hicsim

#endif  // HICSIM_DATASET_HPP
