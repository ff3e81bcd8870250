// SPDX-License-Identifier: Apache-2.0

#include "hicsim/tensor.hpp"

namespace hicsim {

void im2col(const double* img, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* cols) {
  const int oh = conv_out_extent(h, kh, stride, pad);
  const int ow = conv_out_extent(w, kw, stride, pad);
  const int ckk = c * kh * kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* col = cols + (static_cast<std::size_t>(oy) * ow + ox) * ckk;
      for (int ch = 0; ch < c; ++ch) {
        for (int r = 0; r < kh; ++r) {
          const int iy = oy * stride + r - pad;
          for (int s = 0; s < kw; ++s) {
            const int ix = ox * stride + s - pad;
            const int k = (ch * kh + r) * kw + s;
            col[k] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                         ? img[(static_cast<std::size_t>(ch) * h + iy) * w + ix]
                         : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* img) {
  const int oh = conv_out_extent(h, kh, stride, pad);
  const int ow = conv_out_extent(w, kw, stride, pad);
  const int ckk = c * kh * kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* col = cols + (static_cast<std::size_t>(oy) * ow + ox) * ckk;
      for (int ch = 0; ch < c; ++ch) {
        for (int r = 0; r < kh; ++r) {
          const int iy = oy * stride + r - pad;
          if (iy < 0 || iy >= h) continue;
          for (int s = 0; s < kw; ++s) {
            const int ix = ox * stride + s - pad;
            if (ix < 0 || ix >= w) continue;
            const int k = (ch * kh + r) * kw + s;
            img[(static_cast<std::size_t>(ch) * h + iy) * w + ix] += col[k];
          }
        }
      }
    }
  }
}

}  // namespace hicsim
