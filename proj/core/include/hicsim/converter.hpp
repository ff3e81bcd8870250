// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_CONVERTER_HPP
#define HICSIM_CONVERTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hicsim {

// DAC/ADC model at the crossbar boundary.
struct ConverterParams {
  int dac_bits = 8;
  int adc_bits = 8;
  double clip_percentile = 99.5;  // abs-value percentile used for the clip
  int warmup_batches = 2;         // batches observed before clips freeze
  bool enabled = true;            // ablation switch: bypass all quantization
  bool quantize_backward = true;  // apply DAC/ADC on the transposed pass too

  void validate() const {
    if (dac_bits < 2 || dac_bits > 16 || adc_bits < 2 || adc_bits > 16)
      throw std::invalid_argument("converter: bits must be in [2, 16]");
    if (!(clip_percentile > 0.0 && clip_percentile <= 100.0))
      throw std::invalid_argument("converter: clip_percentile must be in (0, 100]");
    if (warmup_batches < 1)
      throw std::invalid_argument("converter: warmup_batches must be >= 1");
  }
};

// Symmetric uniform quantizer over [-clip, clip] with 2^bits - 1 codes, so
// zero is exactly representable. Ties round to even. A non-positive clip
// passes the value through (nothing was observed during calibration).
inline double quantize_symmetric(double x, double clip, int bits) {
  if (clip <= 0.0) return x;
  const double half_codes = static_cast<double>((1 << (bits - 1)) - 1);
  const double step = clip / half_codes;
  const double k = std::nearbyint(x / step);
  return step * std::clamp(k, -half_codes, half_codes);
}

// Per-layer clip values, frozen after calibration.
struct ClipSet {
  double fwd_in = 0.0;   // DAC clip on forward inputs
  double fwd_out = 0.0;  // ADC clip on forward tile sums
  double bwd_in = 0.0;   // DAC clip on backward errors
  double bwd_out = 0.0;  // ADC clip on backward tile sums
};

// Collects absolute values during warmup; the clip is the nearest-rank
// percentile of the recorded magnitudes.
class ClipRecorder {
 public:
  void record(double v) { samples_.push_back(std::abs(v)); }

  void record_span(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) record(v[i]);
  }

  std::size_t size() const { return samples_.size(); }

  // Nearest-rank percentile: rank = ceil(pct/100 * N), 1-based.
  double percentile(double pct) const {
    if (samples_.empty()) return 0.0;
    std::vector<double> s(samples_);
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, s.size());
    return s[rank - 1];
  }

  void clear() {
    samples_.clear();
    samples_.shrink_to_fit();
  }

 private:
  std::vector<double> samples_;
};

}  // namespace hicsim

#endif  // HICSIM_CONVERTER_HPP
