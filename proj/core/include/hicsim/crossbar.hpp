// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_CROSSBAR_HPP
#define HICSIM_CROSSBAR_HPP

#include <cstdint>

#include "hicsim/converter.hpp"
#include "hicsim/hybrid_weight.hpp"

namespace hicsim {

struct CrossbarParams {
  int tile_rows = 256;
  int tile_cols = 256;
  ConverterParams converter;

  void validate() const;
};

// How a logical rows x cols array splits into physical tiles.
struct TilingPlan {
  int rows = 0;
  int cols = 0;
  int tile_rows = 0;
  int tile_cols = 0;

  int row_tiles() const { return (rows + tile_rows - 1) / tile_rows; }
  int col_tiles() const { return (cols + tile_cols - 1) / tile_cols; }
  int row_begin(int rt) const { return rt * tile_rows; }
  int row_end(int rt) const { return std::min(rows, (rt + 1) * tile_rows); }
  int col_begin(int ct) const { return ct * tile_cols; }
  int col_end(int ct) const { return std::min(cols, (ct + 1) * tile_cols); }
};

// Transposable analog VMM over one hybrid weight array.
//
// Forward drives the rows:    y[j] = sum_i x[i] * Gdiff(i, j)
// Backward drives the columns: z[i] = sum_j d[j] * Gdiff(i, j)
// both scaled by delta_msb / g_unit so results live in logical weight units.
//
// Inputs pass a DAC, each tile's analog sum passes an ADC, and tile partial
// sums combine digitally. Clips calibrate on warmup traffic (nearest-rank
// percentile of magnitudes) and then freeze. VMMs are pure with respect to
// device state; op_id keys the fresh per-device read-noise draws of one
// operation, so concurrent VMMs at distinct op_ids are deterministic.
class TiledCrossbar {
 public:
  TiledCrossbar(HybridWeightMatrix& weights, const CrossbarParams& params);

  int rows() const { return plan_.rows; }
  int cols() const { return plan_.cols; }
  const TilingPlan& plan() const { return plan_; }
  const CrossbarParams& params() const { return params_; }
  HybridWeightMatrix& weights() { return weights_; }
  const HybridWeightMatrix& weights() const { return weights_; }

  // Quantized VMM (bypasses converters until clips freeze).
  void forward(const double* x, double* y, double t, ReadMode mode,
               std::uint64_t op_id) const;
  void backward(const double* d, double* z, double t, ReadMode mode,
                std::uint64_t op_id) const;

  // Warmup variants: unquantized, and record magnitudes for calibration.
  void forward_calibrating(const double* x, double* y, double t, ReadMode mode,
                           std::uint64_t op_id);
  void backward_calibrating(const double* d, double* z, double t, ReadMode mode,
                            std::uint64_t op_id);

  // Compute clips from recorded traffic, drop the samples, start quantizing.
  void freeze_clips();
  bool frozen() const { return frozen_; }
  const ClipSet& clips() const { return clips_; }
  void restore_clips(const ClipSet& clips, bool frozen);

  std::uint64_t next_op_id() { return op_seq_++; }
  std::uint64_t op_seq() const { return op_seq_; }
  void set_op_seq(std::uint64_t v) { op_seq_ = v; }

  // Cache the drifted pair conductances at time t so repeated VMMs in one
  // batch pay the drift power law once per device. Results are bit-identical
  // to uncached reads; the cache must be retaken after any programming or
  // time change (noisy VMMs at other times fall back to direct reads).
  void snapshot_drift(double t);
  void invalidate_snapshot() { snap_valid_ = false; }

 private:
  void vmm(const double* in, double* out, double t, ReadMode mode,
           std::uint64_t op_id, bool transpose, bool quantize,
           ClipRecorder* in_rec, ClipRecorder* out_rec) const;

  HybridWeightMatrix& weights_;
  CrossbarParams params_;
  TilingPlan plan_;
  ClipSet clips_;
  bool frozen_ = false;
  std::uint64_t op_seq_ = 0;
  ClipRecorder fwd_in_rec_;
  ClipRecorder fwd_out_rec_;
  ClipRecorder bwd_in_rec_;
  ClipRecorder bwd_out_rec_;
  bool snap_valid_ = false;
  double snap_t_ = 0.0;
  std::vector<double> snap_plus_;
  std::vector<double> snap_minus_;
};

}  // namespace hicsim

#endif  // HICSIM_CROSSBAR_HPP
