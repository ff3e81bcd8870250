// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_TENSOR_HPP
#define HICSIM_TENSOR_HPP

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hicsim {

// Dense row-major tensor of doubles. Dimension 0 is the batch dimension
// throughout the engine: (N, D) for vectors, (N, C, H, W) for images.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(count(shape)), 0.0);
  }

  static long long count(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  long long numel() const { return static_cast<long long>(v.size()); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  int batch() const { return shape.empty() ? 0 : shape[0]; }

  // Elements per sample (product of non-batch dimensions).
  long long sample_size() const {
    if (shape.empty()) return 0;
    return numel() / (shape[0] == 0 ? 1 : shape[0]);
  }

  double* sample(int n) { return v.data() + n * sample_size(); }
  const double* sample(int n) const { return v.data() + n * sample_size(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// im2col for one sample in CHW layout. Column index K follows
// K = (c * KH + r) * KW + s; output position index P = oy * OW + ox.
// cols must hold OH*OW*C*KH*KW doubles; written as cols[P * CKK + K].
void im2col(const double* img, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* cols);

// Transpose of im2col: scatter-add column gradients back onto the image.
void col2im(const double* cols, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* img);

inline int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace hicsim

#endif  // HICSIM_TENSOR_HPP
