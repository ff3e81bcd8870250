// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hicsim/dataset.hpp"

using namespace hicsim;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/hicsim_test_") + name;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("synthetic splits are deterministic, disjoint, and balanced") {
  DatasetSource src;
  src.kind = DatasetSource::Kind::kSyntheticGaussians;
  src.classes = 3;
  src.train_per_class = 40;
  src.test_per_class = 10;
  src.seed = 42;

  const Dataset a = load_dataset(src);
  const Dataset b = load_dataset(src);
  CHECK(a.train_x.v == b.train_x.v);
  CHECK(a.test_x.v == b.test_x.v);
  CHECK(a.train_y == b.train_y);
  CHECK(a.train_x.shape == std::vector<int>{120, 2});
  CHECK(a.test_x.shape == std::vector<int>{30, 2});
  CHECK(a.classes == 3);

  int counts[3] = {0, 0, 0};
  for (int y : a.train_y) counts[y] += 1;
  for (int c = 0; c < 3; ++c) CHECK(counts[c] == 40);

  // Train and test draws come from disjoint key spaces: the first test
  // sample of a class never equals the first train sample.
  CHECK(a.train_x.v[0] != a.test_x.v[0]);

  src.seed = 43;
  const Dataset c = load_dataset(src);
  CHECK(a.train_x.v != c.train_x.v);
}

TEST_CASE("spirals stay inside the unit-ish disc and interleave arms") {
  DatasetSource src;
  src.kind = DatasetSource::Kind::kSyntheticSpirals;
  src.classes = 2;
  src.train_per_class = 200;
  src.test_per_class = 50;
  src.noise = 0.0;  // pure geometry
  const Dataset ds = load_dataset(src);
  for (int i = 0; i < ds.train_x.batch(); ++i) {
    const double* p = ds.train_x.sample(i);
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1]);
    CHECK(r >= 0.2 - 1e-12);
    CHECK(r <= 1.0 + 1e-12);
  }
  // Noise-free arms never coincide: nearest neighbour of a class-0 point at
  // the same radius belongs to the other arm only at a different angle.
  const double* p0 = ds.train_x.sample(0);
  bool any_other_class_nearby = false;
  for (int i = 0; i < ds.train_x.batch(); ++i) {
    if (ds.train_y[static_cast<std::size_t>(i)] == 0) continue;
    const double* q = ds.train_x.sample(i);
    const double d = std::hypot(p0[0] - q[0], p0[1] - q[1]);
    if (d < 1e-9) any_other_class_nearby = true;
  }
  CHECK_FALSE(any_other_class_nearby);
}

TEST_CASE("idx reader parses valid files and rejects bad magic and truncation") {
  // 2 images of 2x3 pixels, values 0..11; labels {1, 0}.
  std::vector<unsigned char> img;
  push_be32(img, 0x00000803u);
  push_be32(img, 2);
  push_be32(img, 2);
  push_be32(img, 3);
  for (int i = 0; i < 12; ++i) img.push_back(static_cast<unsigned char>(i * 20));
  std::vector<unsigned char> lab;
  push_be32(lab, 0x00000801u);
  push_be32(lab, 2);
  lab.push_back(1);
  lab.push_back(0);

  const std::string pi = temp_path("train_images.idx");
  const std::string pl = temp_path("train_labels.idx");
  write_bytes(pi, img);
  write_bytes(pl, lab);

  DatasetSource src;
  src.kind = DatasetSource::Kind::kImageIdx;
  src.classes = 2;
  src.train_images = src.test_images = pi;
  src.train_labels = src.test_labels = pl;
  src.normalize = false;

  const Dataset ds = load_dataset(src);
  CHECK(ds.train_x.shape == std::vector<int>{2, 1, 2, 3});
  CHECK(ds.train_x.v[0] == 0.0);
  CHECK(ds.train_x.v[5] == 100.0);
  CHECK(ds.train_y == std::vector<int>{1, 0});

  src.normalize = true;
  const Dataset dn = load_dataset(src);
  CHECK(dn.train_x.v[5] == doctest::Approx(100.0 / 255.0 - 0.5).epsilon(1e-15));

  // Wrong magic: error names the offending offset.
  std::vector<unsigned char> bad = img;
  bad[3] = 0x77;
  const std::string pb = temp_path("bad_magic.idx");
  write_bytes(pb, bad);
  src.train_images = pb;
  CHECK_THROWS_WITH_AS(load_dataset(src),
                       doctest::Contains("offset 0"), std::runtime_error);

  // Truncated pixel payload.
  std::vector<unsigned char> cut(img.begin(), img.end() - 4);
  const std::string pc = temp_path("truncated.idx");
  write_bytes(pc, cut);
  src.train_images = pc;
  CHECK_THROWS_WITH_AS(load_dataset(src), doctest::Contains("truncated"),
                       std::runtime_error);
  std::remove(pi.c_str());
  std::remove(pl.c_str());
  std::remove(pb.c_str());
  std::remove(pc.c_str());
}

TEST_CASE("csv round-trips exactly and rejects malformed rows") {
  DatasetSource gen;
  gen.kind = DatasetSource::Kind::kSyntheticGaussians;
  gen.classes = 2;
  gen.train_per_class = 25;
  gen.test_per_class = 5;
  gen.seed = 7;
  const Dataset ds = load_dataset(gen);

  const std::string ptr = temp_path("train.csv");
  const std::string pte = temp_path("test.csv");
  write_csv(ptr, ds.train_x, ds.train_y);
  write_csv(pte, ds.test_x, ds.test_y);

  DatasetSource src;
  src.kind = DatasetSource::Kind::kCsv;
  src.classes = 2;
  src.train_csv = ptr;
  src.test_csv = pte;
  const Dataset rt = load_dataset(src);
  CHECK(rt.train_x.v == ds.train_x.v);  // %.17g round-trips doubles exactly
  CHECK(rt.train_y == ds.train_y);
  CHECK(rt.test_x.v == ds.test_x.v);
  CHECK(rt.classes == 2);

  const std::string pbad = temp_path("bad.csv");
  {
    std::ofstream f(pbad);
    f << "0,1.5,2.5\n1,3.5\n";
  }
  src.train_csv = pbad;
  CHECK_THROWS_WITH_AS(load_dataset(src), doctest::Contains("ragged"),
                       std::runtime_error);
  {
    std::ofstream f(pbad);
    f << "0,1.5,oops\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(src), doctest::Contains("bad number"),
                       std::runtime_error);
  {
    std::ofstream f(pbad);
    f << "0.5,1.5,2.5\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(src), doctest::Contains("label"),
                       std::runtime_error);
  std::remove(ptr.c_str());
  std::remove(pte.c_str());
  std::remove(pbad.c_str());
}

TEST_CASE("source validation rejects bad parameter combinations") {
  DatasetSource src;
  src.classes = 1;
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
  src.classes = 2;
  src.noise = -0.5;
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);
  src.noise = 0.1;
  src.kind = DatasetSource::Kind::kImageIdx;
  CHECK_THROWS_AS(src.validate(), std::invalid_argument);  // missing paths
  CHECK(dataset_kind_from_name("synthetic-spirals") ==
        DatasetSource::Kind::kSyntheticSpirals);
  CHECK_THROWS_AS(dataset_kind_from_name("parquet"), std::invalid_argument);
  CHECK(std::string(dataset_kind_name(DatasetSource::Kind::kCsv)) == "csv");
}

}  // TEST_SUITE
