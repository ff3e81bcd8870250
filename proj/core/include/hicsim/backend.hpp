// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_BACKEND_HPP
#define HICSIM_BACKEND_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "hicsim/crossbar.hpp"
#include "hicsim/hybrid_weight.hpp"

namespace hicsim {

// Gradient-to-tick quantization policy. Updates are expressed in integer
// multiples of delta_lsb before entering the accumulator.
struct GradQuantizer {
  enum class Rounding { kNearest, kStochastic };
  Rounding rounding = Rounding::kNearest;
  int clip_ticks = 127;
};

// Aggregate result of one weight-update phase on one array.
struct ApplyStats {
  std::uint64_t flips = 0;       // LSB bit-plane flips
  std::uint64_t carries = 0;     // accumulate calls with nonzero carry
  std::uint64_t clamps = 0;      // accumulator/level rail clamps
  std::uint64_t tick_clips = 0;  // tick values clipped to +-clip_ticks
  std::uint64_t msb_pulses = 0;  // SET pulses spent on MSB pairs
  std::uint64_t refreshes = 0;   // forced reset+reprogram recoveries

  ApplyStats& operator+=(const ApplyStats& o) {
    flips += o.flips;
    carries += o.carries;
    clamps += o.clamps;
    tick_clips += o.tick_clips;
    msb_pulses += o.msb_pulses;
    refreshes += o.refreshes;
    return *this;
  }
};

// Storage + compute engine behind one logical weight matrix (rows x cols,
// forward y = x W). Three implementations: the PCM hybrid path, an ideal
// digital fixed-point twin, and a plain FP32 baseline.
//
// Thread contract: forward/backward are safe to call concurrently at distinct
// op_ids once calibration has frozen (or when no calibration is used); all
// mutating calls are exclusive.
class WeightBackend {
 public:
  virtual ~WeightBackend() = default;

  virtual int rows() const = 0;
  virtual int cols() const = 0;

  // Program the initial logical weights (He-style draws are rounded to the
  // representable grid by each implementation).
  virtual void program_initial(const std::vector<double>& w, const SimClock& clock) = 0;

  virtual void forward(const double* x, double* y, double t, ReadMode mode,
                       std::uint64_t op_id) = 0;
  virtual void backward(const double* dy, double* dx, double t, ReadMode mode,
                        std::uint64_t op_id) = 0;

  // Reserve n consecutive op ids; returns the first.
  virtual std::uint64_t reserve_ops(std::uint64_t n) = 0;

  // Apply one batch update from the full-precision mean gradient.
  virtual ApplyStats apply_update(const double* dw, double lr, const GradQuantizer& q,
                                  const SimClock& clock) = 0;

  virtual std::vector<double> logical_weights() const = 0;

  // Conductance maintenance; returns the number of refreshed pairs.
  virtual int refresh_sweep(const SimClock& clock) { (void)clock; return 0; }

  // Hook called once per batch / evaluation time change.
  virtual void begin_batch(double t) { (void)t; }

  // DAC/ADC clip calibration lifecycle (hybrid path only). While
  // calibrating, only recorded traffic (training passes) shapes the clips;
  // evaluation traffic runs unquantized and unrecorded.
  virtual bool calibrating() const { return false; }
  virtual void freeze_calibration() {}
  virtual int calibration_batches() const { return 0; }
  virtual void set_calibration_recording(bool on) { (void)on; }
};

struct BackendConfig {
  enum class Kind { kHybrid, kFixedPoint, kFp32 };
  Kind kind = Kind::kHybrid;
  QuantScheme scheme;
  DeviceModelParams device;
  ProgramPolicy policy;
  CrossbarParams crossbar;
  std::uint64_t seed = 1;
  EventLog* log = nullptr;
};

std::unique_ptr<WeightBackend> make_backend(const BackendConfig& cfg, int rows,
                                            int cols, std::uint32_t array_id);

// PCM-backed weights: HybridWeightMatrix + TiledCrossbar.
class HybridBackend : public WeightBackend {
 public:
  HybridBackend(int rows, int cols, const BackendConfig& cfg, std::uint32_t array_id);

  int rows() const override { return matrix_.rows(); }
  int cols() const override { return matrix_.cols(); }
  void program_initial(const std::vector<double>& w, const SimClock& clock) override;
  void forward(const double* x, double* y, double t, ReadMode mode,
               std::uint64_t op_id) override;
  void backward(const double* dy, double* dx, double t, ReadMode mode,
                std::uint64_t op_id) override;
  std::uint64_t reserve_ops(std::uint64_t n) override;
  ApplyStats apply_update(const double* dw, double lr, const GradQuantizer& q,
                          const SimClock& clock) override;
  std::vector<double> logical_weights() const override;
  int refresh_sweep(const SimClock& clock) override;
  void begin_batch(double t) override;
  bool calibrating() const override;
  void freeze_calibration() override;
  int calibration_batches() const override;
  void set_calibration_recording(bool on) override { record_calibration_ = on; }

  HybridWeightMatrix& matrix() { return matrix_; }
  const HybridWeightMatrix& matrix() const { return matrix_; }
  TiledCrossbar& crossbar() { return crossbar_; }
  const TiledCrossbar& crossbar() const { return crossbar_; }
  std::uint64_t update_seq() const { return update_seq_; }
  void set_update_seq(std::uint64_t v) { update_seq_ = v; }

 private:
  HybridWeightMatrix matrix_;
  TiledCrossbar crossbar_;
  std::uint64_t update_seq_ = 0;     // keys stochastic-rounding draws
  bool record_calibration_ = true;   // off during evaluation passes
};

// Ideal digital twin: integer levels and accumulator ticks with the same
// carry semantics, no device physics. The ablation baseline.
class FixedPointBackend : public WeightBackend {
 public:
  FixedPointBackend(int rows, int cols, const QuantScheme& scheme, std::uint64_t seed);

  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  void program_initial(const std::vector<double>& w, const SimClock& clock) override;
  void forward(const double* x, double* y, double t, ReadMode mode,
               std::uint64_t op_id) override;
  void backward(const double* dy, double* dx, double t, ReadMode mode,
                std::uint64_t op_id) override;
  std::uint64_t reserve_ops(std::uint64_t n) override { return op_seq_ += n, op_seq_ - n; }
  ApplyStats apply_update(const double* dw, double lr, const GradQuantizer& q,
                          const SimClock& clock) override;
  std::vector<double> logical_weights() const override;

  int level(int i, int j) const { return levels_[idx(i, j)]; }
  int acc(int i, int j) const { return accs_[idx(i, j)]; }
  void set_state(int i, int j, int level, int acc);
  std::uint64_t op_seq() const { return op_seq_; }
  void set_op_seq(std::uint64_t v) { op_seq_ = v; }
  std::uint64_t update_seq() const { return update_seq_; }
  void set_update_seq(std::uint64_t v) { update_seq_ = v; }

 private:
  int idx(int i, int j) const { return i * cols_ + j; }
  int rows_;
  int cols_;
  QuantScheme scheme_;
  NoiseSource noise_;
  std::vector<int> levels_;
  std::vector<int> accs_;
  std::uint64_t op_seq_ = 0;
  std::uint64_t update_seq_ = 0;
};

// Plain full-precision weights, direct SGD. The accuracy baseline.
class Fp32Backend : public WeightBackend {
 public:
  Fp32Backend(int rows, int cols);

  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  void program_initial(const std::vector<double>& w, const SimClock& clock) override;
  void forward(const double* x, double* y, double t, ReadMode mode,
               std::uint64_t op_id) override;
  void backward(const double* dy, double* dx, double t, ReadMode mode,
                std::uint64_t op_id) override;
  std::uint64_t reserve_ops(std::uint64_t n) override { return op_seq_ += n, op_seq_ - n; }
  ApplyStats apply_update(const double* dw, double lr, const GradQuantizer& q,
                          const SimClock& clock) override;
  std::vector<double> logical_weights() const override { return w_; }

  double* data() { return w_.data(); }
  const double* data() const { return w_.data(); }
  std::uint64_t op_seq() const { return op_seq_; }
  void set_op_seq(std::uint64_t v) { op_seq_ = v; }

 private:
  int rows_;
  int cols_;
  std::vector<double> w_;
  std::uint64_t op_seq_ = 0;
};

// Shared tick quantization: scaled = -lr * dw / delta_lsb.
int quantize_ticks(double scaled, GradQuantizer::Rounding rounding, int clip_ticks,
                   const NoiseSource& noise, std::uint32_t array_id, int i, int j,
                   std::uint64_t update_seq, bool* clipped);

}  // namespace hicsim

#endif  // HICSIM_BACKEND_HPP
