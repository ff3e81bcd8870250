// SPDX-License-Identifier: Apache-2.0

#ifndef HICSIM_NN_HPP
#define HICSIM_NN_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hicsim/backend.hpp"
#include "hicsim/tensor.hpp"

namespace hicsim {

enum class LayerKind {
  kDense,
  kConv2d,
  kBatchNorm,
  kRelu,
  kResidualAdd,
  kAvgPool,
  kSoftmaxXent,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int units = 0;     // dense: output features
  int channels = 0;  // conv2d: output channels
  int kh = 1;        // conv2d / avgpool kernel
  int kw = 1;
  int stride = 1;
  int pad = 0;            // conv2d only
  std::vector<int> inputs;  // producer node ids; -1 = network input;
                            // empty = the previous node

  static LayerSpec dense(int units) {
    LayerSpec s;
    s.kind = LayerKind::kDense;
    s.units = units;
    return s;
  }
  static LayerSpec conv2d(int channels, int k, int stride = 1, int pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::kConv2d;
    s.channels = channels;
    s.kh = s.kw = k;
    s.stride = stride;
    s.pad = pad;
    return s;
  }
  static LayerSpec batchnorm() { return LayerSpec{LayerKind::kBatchNorm}; }
  static LayerSpec relu() { return LayerSpec{LayerKind::kRelu}; }
  static LayerSpec residual_add(int a, int b) {
    LayerSpec s;
    s.kind = LayerKind::kResidualAdd;
    s.inputs = {a, b};
    return s;
  }
  static LayerSpec avgpool(int k, int stride) {
    LayerSpec s;
    s.kind = LayerKind::kAvgPool;
    s.kh = s.kw = k;
    s.stride = stride;
    return s;
  }
  static LayerSpec softmax_xent() { return LayerSpec{LayerKind::kSoftmaxXent}; }

 private:
  explicit LayerSpec(LayerKind k) : kind(k) {}

 public:
  LayerSpec() = default;
};

// Per-channel affine normalization state. Digital and full precision.
struct BatchNormState {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;  // EMA weight of the current batch during training

  void init(int channels);
  int channels() const { return static_cast<int>(gamma.size()); }
};

struct NetNode {
  LayerSpec spec;
  std::vector<int> in;          // resolved producers (-1 = network input)
  std::vector<int> shape;       // per-sample output shape
  std::unique_ptr<WeightBackend> backend;  // dense / conv2d
  BatchNormState bn;            // batchnorm
};

// Per-pass scratch: activations, gradients, weight gradients, saved
// batchnorm batch statistics. Reused across batches.
struct PassCache {
  Tensor input;
  std::vector<int> labels;
  std::vector<Tensor> act;
  std::vector<Tensor> grad;
  std::vector<std::vector<double>> wgrad;     // per node, rows*cols, batch mean
  std::vector<std::vector<double>> bn_dgamma;
  std::vector<std::vector<double>> bn_dbeta;
  std::vector<std::vector<double>> bn_mean;   // batch stats saved by forward
  std::vector<std::vector<double>> bn_var;
  double loss = 0.0;
  int correct = 0;
};

// Accumulates population statistics of batchnorm inputs (AdaBS).
struct BnStatsCollector {
  std::vector<std::vector<double>> sum;
  std::vector<std::vector<double>> sumsq;
  std::vector<long long> count;
};

// Feed-forward DAG in topological (insertion) order, ending in a
// softmax-xent head. Dense layers flatten their input implicitly.
class Network {
 public:
  // Building: add nodes, then build() to infer shapes and create backends.
  int add(const LayerSpec& spec);
  void build(const std::vector<int>& input_sample_shape, const BackendConfig& cfg);
  bool built() const { return built_; }

  int size() const { return static_cast<int>(nodes_.size()); }
  NetNode& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
  const NetNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& input_shape() const { return input_shape_; }
  int classes() const { return classes_; }
  long long crossbar_params() const;
  long long digital_params() const;

  // He-style initialization: draws keyed by (seed, array, i, j), rounded to
  // each backend's representable grid, programmed at clock.now.
  void init_weights(std::uint64_t seed, const SimClock& clock);

  struct BatchResult {
    double loss = 0.0;
    int correct = 0;
  };

  BatchResult forward(const Tensor& x, const std::vector<int>& labels, double t,
                      ReadMode mode, bool training, int threads, PassCache& cache,
                      BnStatsCollector* collect = nullptr);
  void backward(double t, ReadMode mode, int threads, PassCache& cache);

  // Weight update phase: crossbar ticks via each backend, batchnorm
  // gamma/beta via plain SGD. Exclusive (no concurrent forward).
  ApplyStats apply_updates(double lr, const GradQuantizer& q, const SimClock& clock,
                           const PassCache& cache);

  int refresh_sweep(const SimClock& clock);
  void begin_batch(double t);
  bool any_calibrating() const;
  void freeze_calibration();
  // Warmup batches required before clips freeze (max over layers).
  int calibration_batches() const;

  // AdaBS support: size a collector / replace running stats with the
  // collected population statistics.
  void size_collector(BnStatsCollector& c) const;
  void adopt_bn_stats(const BnStatsCollector& c);

 private:
  const Tensor& input_of(int node, int slot, const PassCache& cache) const;
  void forward_node(int k, double t, ReadMode mode, bool training, int threads,
                    PassCache& cache, BnStatsCollector* collect,
                    const std::vector<int>& labels);
  void backward_node(int k, double t, ReadMode mode, int threads, PassCache& cache);

  std::vector<NetNode> nodes_;
  std::vector<int> input_shape_;
  int classes_ = 0;
  bool built_ = false;
};

// Architecture text: whitespace-separated tokens, e.g.
//   "dense:16 bn relu dense:16 bn relu dense:2"
//   "conv:8:3:1:1 bn relu res:3 conv:8:3:1:1 bn relu avgpool:2:2 dense:10"
// Tokens: dense:<units>, conv:<cout>:<k>[:<stride>[:<pad>]], bn, relu,
// avgpool:<k>:<stride>, res:<n> (adds a skip connection around the next n
// tokens). A softmax-xent head is appended automatically. width_multiplier
// scales dense units and conv channels (except the final dense layer, which
// keeps the class count).
Network build_network(const std::string& arch, double width_multiplier,
                      const std::vector<int>& input_sample_shape, int classes,
                      const BackendConfig& cfg);

}  // namespace hicsim

#endif  // HICSIM_NN_HPP
