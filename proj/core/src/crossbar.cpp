// SPDX-License-Identifier: Apache-2.0

#include "hicsim/crossbar.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace hicsim {

void CrossbarParams::validate() const {
  if (tile_rows < 1 || tile_cols < 1)
    throw std::invalid_argument("crossbar: tile dimensions must be >= 1");
  converter.validate();
}

TiledCrossbar::TiledCrossbar(HybridWeightMatrix& weights, const CrossbarParams& params)
    : weights_(weights), params_(params) {
  params_.validate();
  plan_ = TilingPlan{weights.rows(), weights.cols(), params_.tile_rows, params_.tile_cols};
}

void TiledCrossbar::vmm(const double* in, double* out, double t, ReadMode mode,
                        std::uint64_t op_id, bool transpose, bool quantize,
                        ClipRecorder* in_rec, ClipRecorder* out_rec) const {
  const QuantScheme& s = weights_.scheme();
  const double scale = s.delta_msb() / s.g_unit;
  const int n_in = transpose ? plan_.cols : plan_.rows;
  const int n_out = transpose ? plan_.rows : plan_.cols;
  const double in_clip = transpose ? clips_.bwd_in : clips_.fwd_in;
  const double out_clip = transpose ? clips_.bwd_out : clips_.fwd_out;
  const int dac_bits = params_.converter.dac_bits;
  const int adc_bits = params_.converter.adc_bits;

  if (in_rec) in_rec->record_span(in, static_cast<std::size_t>(n_in));
  std::vector<double> xq(static_cast<std::size_t>(n_in));
  for (int i = 0; i < n_in; ++i)
    xq[static_cast<std::size_t>(i)] =
        quantize ? quantize_symmetric(in[i], in_clip, dac_bits) : in[i];

  std::fill(out, out + n_out, 0.0);
  const DeviceModelParams& dp = weights_.params();
  const NoiseSource& noise = weights_.noise();

  const bool cached = snap_valid_ && snap_t_ == t;
  const auto gdiff = [&](int i, int j) -> double {
    if (mode == ReadMode::kIdeal)
      return weights_.plus(i, j).g_prog - weights_.minus(i, j).g_prog;
    if (cached) {
      const std::size_t k =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(plan_.cols) +
          static_cast<std::size_t>(j);
      const double gp = noisy_read(snap_plus_[k], dp, noise, weights_.key_plus(i, j), op_id);
      const double gm = noisy_read(snap_minus_[k], dp, noise, weights_.key_minus(i, j), op_id);
      return gp - gm;
    }
    const double gp =
        read_analog(weights_.plus(i, j), dp, t, noise, weights_.key_plus(i, j), op_id);
    const double gm =
        read_analog(weights_.minus(i, j), dp, t, noise, weights_.key_minus(i, j), op_id);
    return gp - gm;
  };

  // Tile partial sums are quantized independently and combined digitally,
  // input indices ascending within a tile, tiles in ascending index order.
  if (!transpose) {
    for (int ct = 0; ct < plan_.col_tiles(); ++ct) {
      for (int rt = 0; rt < plan_.row_tiles(); ++rt) {
        for (int j = plan_.col_begin(ct); j < plan_.col_end(ct); ++j) {
          double sum = 0.0;
          for (int i = plan_.row_begin(rt); i < plan_.row_end(rt); ++i)
            sum += xq[static_cast<std::size_t>(i)] * gdiff(i, j);
          if (out_rec) out_rec->record(sum);
          out[j] += quantize ? quantize_symmetric(sum, out_clip, adc_bits) : sum;
        }
      }
    }
  } else {
    for (int rt = 0; rt < plan_.row_tiles(); ++rt) {
      for (int ct = 0; ct < plan_.col_tiles(); ++ct) {
        for (int i = plan_.row_begin(rt); i < plan_.row_end(rt); ++i) {
          double sum = 0.0;
          for (int j = plan_.col_begin(ct); j < plan_.col_end(ct); ++j)
            sum += xq[static_cast<std::size_t>(j)] * gdiff(i, j);
          if (out_rec) out_rec->record(sum);
          out[i] += quantize ? quantize_symmetric(sum, out_clip, adc_bits) : sum;
        }
      }
    }
  }
  for (int k = 0; k < n_out; ++k) out[k] *= scale;
}

void TiledCrossbar::forward(const double* x, double* y, double t, ReadMode mode,
                            std::uint64_t op_id) const {
  vmm(x, y, t, mode, op_id, /*transpose=*/false,
      frozen_ && params_.converter.enabled, nullptr, nullptr);
}

void TiledCrossbar::backward(const double* d, double* z, double t, ReadMode mode,
                             std::uint64_t op_id) const {
  vmm(d, z, t, mode, op_id, /*transpose=*/true,
      frozen_ && params_.converter.enabled && params_.converter.quantize_backward,
      nullptr, nullptr);
}

void TiledCrossbar::forward_calibrating(const double* x, double* y, double t,
                                        ReadMode mode, std::uint64_t op_id) {
  vmm(x, y, t, mode, op_id, /*transpose=*/false, /*quantize=*/false, &fwd_in_rec_,
      &fwd_out_rec_);
}

void TiledCrossbar::backward_calibrating(const double* d, double* z, double t,
                                         ReadMode mode, std::uint64_t op_id) {
  vmm(d, z, t, mode, op_id, /*transpose=*/true, /*quantize=*/false, &bwd_in_rec_,
      &bwd_out_rec_);
}

void TiledCrossbar::freeze_clips() {
  const double pct = params_.converter.clip_percentile;
  clips_.fwd_in = fwd_in_rec_.percentile(pct);
  clips_.fwd_out = fwd_out_rec_.percentile(pct);
  clips_.bwd_in = bwd_in_rec_.percentile(pct);
  clips_.bwd_out = bwd_out_rec_.percentile(pct);
  fwd_in_rec_.clear();
  fwd_out_rec_.clear();
  bwd_in_rec_.clear();
  bwd_out_rec_.clear();
  frozen_ = true;
}

void TiledCrossbar::restore_clips(const ClipSet& clips, bool frozen) {
  clips_ = clips;
  frozen_ = frozen;
}

void TiledCrossbar::snapshot_drift(double t) {
  const DeviceModelParams& dp = weights_.params();
  const std::size_t n =
      static_cast<std::size_t>(plan_.rows) * static_cast<std::size_t>(plan_.cols);
  snap_plus_.resize(n);
  snap_minus_.resize(n);
  for (int i = 0; i < plan_.rows; ++i) {
    for (int j = 0; j < plan_.cols; ++j) {
      const std::size_t k =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(plan_.cols) +
          static_cast<std::size_t>(j);
      const MultiLevelDevice& p = weights_.plus(i, j);
      const MultiLevelDevice& m = weights_.minus(i, j);
      snap_plus_[k] = drifted_conductance(p.g_prog, p.t_prog, p.nu, dp, t);
      snap_minus_[k] = drifted_conductance(m.g_prog, m.t_prog, m.nu, dp, t);
    }
  }
  snap_t_ = t;
  snap_valid_ = true;
}

}  // namespace hicsim
