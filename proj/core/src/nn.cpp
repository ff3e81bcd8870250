// SPDX-License-Identifier: Apache-2.0

#include "hicsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hicsim/util.hpp"

namespace hicsim {

namespace {

constexpr int kReduceChunks = 16;  // fixed so results are thread-count-free

long long product(const std::vector<int>& s) {
  long long p = 1;
  for (int d : s) p *= d;
  return p;
}

void ensure_shape(Tensor& t, const std::vector<int>& shape) {
  if (t.shape != shape) t = Tensor(shape);
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kResidualAdd: return "residual-add";
    case LayerKind::kAvgPool: return "avgpool";
    case LayerKind::kSoftmaxXent: return "softmax-xent";
  }
  return "?";
}

void BatchNormState::init(int ch) {
  gamma.assign(static_cast<std::size_t>(ch), 1.0);
  beta.assign(static_cast<std::size_t>(ch), 0.0);
  running_mean.assign(static_cast<std::size_t>(ch), 0.0);
  running_var.assign(static_cast<std::size_t>(ch), 1.0);
}

int Network::add(const LayerSpec& spec) {
  if (built_) throw std::logic_error("network: add after build");
  nodes_.push_back(NetNode{spec, {}, {}, nullptr, {}});
  return static_cast<int>(nodes_.size()) - 1;
}

void Network::build(const std::vector<int>& input_sample_shape, const BackendConfig& cfg) {
  if (built_) throw std::logic_error("network: already built");
  if (nodes_.empty()) throw std::invalid_argument("network: no layers");
  input_shape_ = input_sample_shape;
  std::uint32_t next_array = 0;

  const auto shape_of = [&](int id) -> const std::vector<int>& {
    return id < 0 ? input_shape_ : nodes_[static_cast<std::size_t>(id)].shape;
  };

  for (int k = 0; k < size(); ++k) {
    NetNode& nd = nodes_[static_cast<std::size_t>(k)];
    nd.in = nd.spec.inputs.empty() ? std::vector<int>{k - 1} : nd.spec.inputs;
    for (int id : nd.in)
      if (id < -1 || id >= k)
        throw std::invalid_argument("network: node inputs must precede the node");

    const std::vector<int>& in_shape = shape_of(nd.in[0]);
    switch (nd.spec.kind) {
      case LayerKind::kDense: {
        const int in_dim = static_cast<int>(product(in_shape));
        if (nd.spec.units < 1) throw std::invalid_argument("dense: units must be >= 1");
        nd.shape = {nd.spec.units};
        nd.backend = make_backend(cfg, in_dim, nd.spec.units, next_array++);
        break;
      }
      case LayerKind::kConv2d: {
        if (in_shape.size() != 3)
          throw std::invalid_argument("conv2d: input must be (C, H, W)");
        const int c = in_shape[0], h = in_shape[1], w = in_shape[2];
        const int oh = conv_out_extent(h, nd.spec.kh, nd.spec.stride, nd.spec.pad);
        const int ow = conv_out_extent(w, nd.spec.kw, nd.spec.stride, nd.spec.pad);
        if (nd.spec.channels < 1 || oh < 1 || ow < 1)
          throw std::invalid_argument("conv2d: bad geometry");
        nd.shape = {nd.spec.channels, oh, ow};
        nd.backend =
            make_backend(cfg, c * nd.spec.kh * nd.spec.kw, nd.spec.channels, next_array++);
        break;
      }
      case LayerKind::kBatchNorm: {
        nd.shape = in_shape;
        nd.bn.init(in_shape[0]);
        break;
      }
      case LayerKind::kRelu: {
        nd.shape = in_shape;
        break;
      }
      case LayerKind::kResidualAdd: {
        if (nd.in.size() != 2)
          throw std::invalid_argument("residual-add: needs exactly two inputs");
        if (shape_of(nd.in[0]) != shape_of(nd.in[1]))
          throw std::invalid_argument("residual-add: input shapes differ");
        nd.shape = in_shape;
        break;
      }
      case LayerKind::kAvgPool: {
        if (in_shape.size() != 3)
          throw std::invalid_argument("avgpool: input must be (C, H, W)");
        const int oh = conv_out_extent(in_shape[1], nd.spec.kh, nd.spec.stride, 0);
        const int ow = conv_out_extent(in_shape[2], nd.spec.kw, nd.spec.stride, 0);
        if (oh < 1 || ow < 1) throw std::invalid_argument("avgpool: bad geometry");
        nd.shape = {in_shape[0], oh, ow};
        break;
      }
      case LayerKind::kSoftmaxXent: {
        if (k != size() - 1)
          throw std::invalid_argument("softmax-xent: must be the final node");
        if (in_shape.size() != 1)
          throw std::invalid_argument("softmax-xent: input must be flat logits");
        nd.shape = in_shape;
        classes_ = in_shape[0];
        break;
      }
    }
  }
  if (nodes_.back().spec.kind != LayerKind::kSoftmaxXent)
    throw std::invalid_argument("network: must end in softmax-xent");
  built_ = true;
}

long long Network::crossbar_params() const {
  long long n = 0;
  for (const NetNode& nd : nodes_)
    if (nd.backend) n += static_cast<long long>(nd.backend->rows()) * nd.backend->cols();
  return n;
}

long long Network::digital_params() const {
  long long n = 0;
  for (const NetNode& nd : nodes_)
    if (nd.spec.kind == LayerKind::kBatchNorm) n += 2LL * nd.bn.channels();
  return n;
}

void Network::init_weights(std::uint64_t seed, const SimClock& clock) {
  NoiseSource ns(seed);
  std::uint32_t array = 0;
  for (NetNode& nd : nodes_) {
    if (!nd.backend) continue;
    const int rows = nd.backend->rows(), cols = nd.backend->cols();
    const double stddev = std::sqrt(2.0 / static_cast<double>(rows));
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        w[static_cast<std::size_t>(i) * cols + j] =
            stddev * ns.gaussian(kSaltInitWeights, array, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(j));
    nd.backend->program_initial(w, clock);
    array += 1;
  }
}

const Tensor& Network::input_of(int node, int slot, const PassCache& cache) const {
  const int id = nodes_[static_cast<std::size_t>(node)].in[static_cast<std::size_t>(slot)];
  return id < 0 ? cache.input : cache.act[static_cast<std::size_t>(id)];
}

Network::BatchResult Network::forward(const Tensor& x, const std::vector<int>& labels,
                                      double t, ReadMode mode, bool training,
                                      int threads, PassCache& cache,
                                      BnStatsCollector* collect) {
  if (!built_) throw std::logic_error("network: forward before build");
  if (x.shape.size() != input_shape_.size() + 1)
    throw std::invalid_argument("network: input rank mismatch");
  for (std::size_t d = 0; d < input_shape_.size(); ++d)
    if (x.shape[d + 1] != input_shape_[d])
      throw std::invalid_argument("network: input shape mismatch");
  if (static_cast<int>(labels.size()) != x.batch())
    throw std::invalid_argument("network: labels/batch mismatch");

  for (NetNode& nd : nodes_)
    if (nd.backend) nd.backend->set_calibration_recording(training);

  cache.input = x;
  cache.labels = labels;
  cache.act.resize(nodes_.size());
  cache.bn_mean.resize(nodes_.size());
  cache.bn_var.resize(nodes_.size());
  cache.loss = 0.0;
  cache.correct = 0;
  for (int k = 0; k < size(); ++k)
    forward_node(k, t, mode, training, threads, cache, collect, labels);
  return BatchResult{cache.loss, cache.correct};
}

void Network::forward_node(int k, double t, ReadMode mode, bool training, int threads,
                           PassCache& cache, BnStatsCollector* collect,
                           const std::vector<int>& labels) {
  NetNode& nd = nodes_[static_cast<std::size_t>(k)];
  const Tensor& in = input_of(k, 0, cache);
  const int n = in.batch();
  Tensor& out = cache.act[static_cast<std::size_t>(k)];
  std::vector<int> out_shape = nd.shape;
  out_shape.insert(out_shape.begin(), n);
  ensure_shape(out, out_shape);

  switch (nd.spec.kind) {
    case LayerKind::kDense: {
      WeightBackend& be = *nd.backend;
      const std::uint64_t base = be.reserve_ops(static_cast<std::uint64_t>(n));
      const int th = be.calibrating() ? 1 : threads;
      parallel_chunks(n, kReduceChunks, th, [&](int, int b, int e) {
        for (int s = b; s < e; ++s)
          be.forward(in.sample(s), out.sample(s), t, mode, base + static_cast<std::uint64_t>(s));
      });
      break;
    }
    case LayerKind::kConv2d: {
      WeightBackend& be = *nd.backend;
      const int cin = in.shape[1];
      const int h = in.shape[2], w = in.shape[3];
      const int oh = nd.shape[1], ow = nd.shape[2];
      const int cout = nd.shape[0];
      const int positions = oh * ow;
      const int ckk = cin * nd.spec.kh * nd.spec.kw;
      const std::uint64_t base =
          be.reserve_ops(static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(positions));
      const int th = be.calibrating() ? 1 : threads;
      parallel_chunks(n, kReduceChunks, th, [&](int, int b, int e) {
        std::vector<double> cols(static_cast<std::size_t>(positions) * ckk);
        std::vector<double> ytmp(static_cast<std::size_t>(cout));
        for (int s = b; s < e; ++s) {
          im2col(in.sample(s), cin, h, w, nd.spec.kh, nd.spec.kw, nd.spec.stride,
                 nd.spec.pad, cols.data());
          double* dst = out.sample(s);
          for (int p = 0; p < positions; ++p) {
            be.forward(cols.data() + static_cast<std::size_t>(p) * ckk, ytmp.data(), t,
                       mode,
                       base + static_cast<std::uint64_t>(s) * positions +
                           static_cast<std::uint64_t>(p));
            for (int co = 0; co < cout; ++co)
              dst[static_cast<std::size_t>(co) * positions + p] = ytmp[static_cast<std::size_t>(co)];
          }
        }
      });
      break;
    }
    case LayerKind::kBatchNorm: {
      BatchNormState& bn = nd.bn;
      const int c = bn.channels();
      const long long spatial = product(nd.shape) / c;
      const long long m = static_cast<long long>(n) * spatial;
      std::vector<double>& mean = cache.bn_mean[static_cast<std::size_t>(k)];
      std::vector<double>& var = cache.bn_var[static_cast<std::size_t>(k)];
      const bool use_batch_stats = training || collect != nullptr;
      if (use_batch_stats) {
        mean.assign(static_cast<std::size_t>(c), 0.0);
        var.assign(static_cast<std::size_t>(c), 0.0);
        for (int s = 0; s < n; ++s) {
          const double* src = in.sample(s);
          for (int ch = 0; ch < c; ++ch)
            for (long long p = 0; p < spatial; ++p)
              mean[static_cast<std::size_t>(ch)] += src[ch * spatial + p];
        }
        for (int ch = 0; ch < c; ++ch) mean[static_cast<std::size_t>(ch)] /= static_cast<double>(m);
        for (int s = 0; s < n; ++s) {
          const double* src = in.sample(s);
          for (int ch = 0; ch < c; ++ch)
            for (long long p = 0; p < spatial; ++p) {
              const double d = src[ch * spatial + p] - mean[static_cast<std::size_t>(ch)];
              var[static_cast<std::size_t>(ch)] += d * d;
            }
        }
        for (int ch = 0; ch < c; ++ch) var[static_cast<std::size_t>(ch)] /= static_cast<double>(m);
        if (collect) {
          // Population statistics for AdaBS; EMA untouched.
          auto& csum = collect->sum[static_cast<std::size_t>(k)];
          auto& csq = collect->sumsq[static_cast<std::size_t>(k)];
          for (int s = 0; s < n; ++s) {
            const double* src = in.sample(s);
            for (int ch = 0; ch < c; ++ch)
              for (long long p = 0; p < spatial; ++p) {
                const double v = src[ch * spatial + p];
                csum[static_cast<std::size_t>(ch)] += v;
                csq[static_cast<std::size_t>(ch)] += v * v;
              }
          }
          collect->count[static_cast<std::size_t>(k)] += m;
        } else {
          for (int ch = 0; ch < c; ++ch) {
            bn.running_mean[static_cast<std::size_t>(ch)] =
                (1.0 - bn.momentum) * bn.running_mean[static_cast<std::size_t>(ch)] +
                bn.momentum * mean[static_cast<std::size_t>(ch)];
            bn.running_var[static_cast<std::size_t>(ch)] =
                (1.0 - bn.momentum) * bn.running_var[static_cast<std::size_t>(ch)] +
                bn.momentum * var[static_cast<std::size_t>(ch)];
          }
        }
      } else {
        mean = bn.running_mean;
        var = bn.running_var;
      }
      for (int s = 0; s < n; ++s) {
        const double* src = in.sample(s);
        double* dst = out.sample(s);
        for (int ch = 0; ch < c; ++ch) {
          const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + bn.eps);
          const double g = bn.gamma[static_cast<std::size_t>(ch)];
          const double b = bn.beta[static_cast<std::size_t>(ch)];
          const double mu = mean[static_cast<std::size_t>(ch)];
          for (long long p = 0; p < spatial; ++p)
            dst[ch * spatial + p] = g * ((src[ch * spatial + p] - mu) * inv) + b;
        }
      }
      break;
    }
    case LayerKind::kRelu: {
      for (long long i = 0; i < in.numel(); ++i)
        out.v[static_cast<std::size_t>(i)] =
            in.v[static_cast<std::size_t>(i)] > 0.0 ? in.v[static_cast<std::size_t>(i)] : 0.0;
      break;
    }
    case LayerKind::kResidualAdd: {
      const Tensor& a = input_of(k, 0, cache);
      const Tensor& b = input_of(k, 1, cache);
      for (long long i = 0; i < a.numel(); ++i)
        out.v[static_cast<std::size_t>(i)] =
            a.v[static_cast<std::size_t>(i)] + b.v[static_cast<std::size_t>(i)];
      break;
    }
    case LayerKind::kAvgPool: {
      const int c = in.shape[1], h = in.shape[2], w = in.shape[3];
      const int oh = nd.shape[1], ow = nd.shape[2];
      const double inv = 1.0 / (nd.spec.kh * nd.spec.kw);
      for (int s = 0; s < n; ++s) {
        const double* src = in.sample(s);
        double* dst = out.sample(s);
        for (int ch = 0; ch < c; ++ch)
          for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
              double acc = 0.0;
              for (int r = 0; r < nd.spec.kh; ++r)
                for (int q = 0; q < nd.spec.kw; ++q)
                  acc += src[(static_cast<std::size_t>(ch) * h + oy * nd.spec.stride + r) * w +
                             ox * nd.spec.stride + q];
              dst[(static_cast<std::size_t>(ch) * oh + oy) * ow + ox] = acc * inv;
            }
      }
      break;
    }
    case LayerKind::kSoftmaxXent: {
      const int c = nd.shape[0];
      double loss = 0.0;
      int correct = 0;
      for (int s = 0; s < n; ++s) {
        const double* logits = in.sample(s);
        double* probs = out.sample(s);
        double mx = logits[0];
        int arg = 0;
        for (int j = 1; j < c; ++j)
          if (logits[j] > mx) {
            mx = logits[j];
            arg = j;
          }
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
          probs[j] = std::exp(logits[j] - mx);
          z += probs[j];
        }
        for (int j = 0; j < c; ++j) probs[j] /= z;
        const int y = labels[static_cast<std::size_t>(s)];
        if (y < 0 || y >= c) throw std::invalid_argument("softmax-xent: label out of range");
        loss -= std::log(std::max(probs[y], 1e-300));
        if (arg == y) correct += 1;
      }
      cache.loss = loss / static_cast<double>(n);
      cache.correct = correct;
      break;
    }
  }
}

void Network::backward(double t, ReadMode mode, int threads, PassCache& cache) {
  const int n = cache.input.batch();
  cache.grad.resize(nodes_.size());
  cache.wgrad.resize(nodes_.size());
  cache.bn_dgamma.resize(nodes_.size());
  cache.bn_dbeta.resize(nodes_.size());
  // Gradient w.r.t. the network input is never needed; producer -1 is skipped.
  for (int k = 0; k < size(); ++k) {
    std::vector<int> shape = nodes_[static_cast<std::size_t>(k)].shape;
    shape.insert(shape.begin(), n);
    ensure_shape(cache.grad[static_cast<std::size_t>(k)], shape);
    std::fill(cache.grad[static_cast<std::size_t>(k)].v.begin(),
              cache.grad[static_cast<std::size_t>(k)].v.end(), 0.0);
  }
  for (int k = size() - 1; k >= 0; --k) backward_node(k, t, mode, threads, cache);
}

void Network::backward_node(int k, double t, ReadMode mode, int threads,
                            PassCache& cache) {
  NetNode& nd = nodes_[static_cast<std::size_t>(k)];
  const int producer = nd.in[0];
  Tensor& dout = cache.grad[static_cast<std::size_t>(k)];
  const int n = cache.input.batch();

  const auto grad_of = [&](int id) -> Tensor* {
    return id < 0 ? nullptr : &cache.grad[static_cast<std::size_t>(id)];
  };

  switch (nd.spec.kind) {
    case LayerKind::kSoftmaxXent: {
      // Seeds the chain: d logits = (p - onehot) / N.
      Tensor* din = grad_of(producer);
      if (!din) return;
      const Tensor& probs = cache.act[static_cast<std::size_t>(k)];
      const int c = nd.shape[0];
      const double invn = 1.0 / static_cast<double>(n);
      for (int s = 0; s < n; ++s) {
        const double* p = probs.sample(s);
        double* d = din->sample(s);
        const int y = cache.labels.empty() ? -1 : cache.labels[static_cast<std::size_t>(s)];
        for (int j = 0; j < c; ++j) d[j] += (p[j] - (j == y ? 1.0 : 0.0)) * invn;
      }
      break;
    }
    case LayerKind::kDense: {
      WeightBackend& be = *nd.backend;
      const Tensor& x = input_of(k, 0, cache);
      const int rows = be.rows(), cols = be.cols();
      Tensor* din = grad_of(producer);

      if (din) {
        const std::uint64_t base = be.reserve_ops(static_cast<std::uint64_t>(n));
        const int th = be.calibrating() ? 1 : threads;
        Tensor dx(std::vector<int>{n, rows});
        parallel_chunks(n, kReduceChunks, th, [&](int, int b, int e) {
          for (int s = b; s < e; ++s)
            be.backward(dout.sample(s), dx.sample(s), t, mode,
                        base + static_cast<std::uint64_t>(s));
        });
        for (long long i = 0; i < din->numel(); ++i)
          din->v[static_cast<std::size_t>(i)] += dx.v[static_cast<std::size_t>(i)];
      }

      // Digital outer product, reduced in fixed chunk order.
      auto& wg = cache.wgrad[static_cast<std::size_t>(k)];
      wg.assign(static_cast<std::size_t>(rows) * cols, 0.0);
      std::vector<std::vector<double>> slabs(kReduceChunks);
      parallel_chunks(n, kReduceChunks, threads, [&](int chunk, int b, int e) {
        auto& slab = slabs[static_cast<std::size_t>(chunk)];
        slab.assign(static_cast<std::size_t>(rows) * cols, 0.0);
        for (int s = b; s < e; ++s) {
          const double* xs = x.sample(s);
          const double* ds = dout.sample(s);
          for (int i = 0; i < rows; ++i) {
            const double xi = xs[i];
            if (xi == 0.0) continue;
            double* row = slab.data() + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) row[j] += xi * ds[j];
          }
        }
      });
      for (const auto& slab : slabs) {
        if (slab.empty()) continue;
        for (std::size_t i = 0; i < wg.size(); ++i) wg[i] += slab[i];
      }
      break;
    }
    case LayerKind::kConv2d: {
      WeightBackend& be = *nd.backend;
      const Tensor& x = input_of(k, 0, cache);
      const int cin = x.shape[1], h = x.shape[2], w = x.shape[3];
      const int cout = nd.shape[0], oh = nd.shape[1], ow = nd.shape[2];
      const int positions = oh * ow;
      const int ckk = be.rows();
      Tensor* din = grad_of(producer);

      const std::uint64_t base =
          din ? be.reserve_ops(static_cast<std::uint64_t>(n) * positions) : 0;
      auto& wg = cache.wgrad[static_cast<std::size_t>(k)];
      wg.assign(static_cast<std::size_t>(ckk) * cout, 0.0);
      std::vector<std::vector<double>> slabs(kReduceChunks);
      std::vector<Tensor> dx_chunks;
      if (din) dx_chunks.resize(kReduceChunks);
      const int th = be.calibrating() ? 1 : threads;
      parallel_chunks(n, kReduceChunks, th, [&](int chunk, int b, int e) {
        auto& slab = slabs[static_cast<std::size_t>(chunk)];
        slab.assign(static_cast<std::size_t>(ckk) * cout, 0.0);
        std::vector<double> cols(static_cast<std::size_t>(positions) * ckk);
        std::vector<double> dcols;
        if (din) dcols.resize(static_cast<std::size_t>(positions) * ckk);
        std::vector<double> dy(static_cast<std::size_t>(cout));
        for (int s = b; s < e; ++s) {
          im2col(x.sample(s), cin, h, w, nd.spec.kh, nd.spec.kw, nd.spec.stride,
                 nd.spec.pad, cols.data());
          const double* dos = dout.sample(s);
          for (int p = 0; p < positions; ++p) {
            for (int co = 0; co < cout; ++co)
              dy[static_cast<std::size_t>(co)] = dos[static_cast<std::size_t>(co) * positions + p];
            const double* col = cols.data() + static_cast<std::size_t>(p) * ckk;
            for (int i = 0; i < ckk; ++i) {
              const double ci = col[i];
              if (ci == 0.0) continue;
              double* row = slab.data() + static_cast<std::size_t>(i) * cout;
              for (int co = 0; co < cout; ++co) row[co] += ci * dy[static_cast<std::size_t>(co)];
            }
            if (din)
              be.backward(dy.data(), dcols.data() + static_cast<std::size_t>(p) * ckk, t,
                          mode,
                          base + static_cast<std::uint64_t>(s) * positions +
                              static_cast<std::uint64_t>(p));
          }
          if (din)
            col2im(dcols.data(), cin, h, w, nd.spec.kh, nd.spec.kw, nd.spec.stride,
                   nd.spec.pad, din->sample(s));
        }
      });
      for (const auto& slab : slabs) {
        if (slab.empty()) continue;
        for (std::size_t i = 0; i < wg.size(); ++i) wg[i] += slab[i];
      }
      break;
    }
    case LayerKind::kBatchNorm: {
      Tensor* din = grad_of(producer);
      const Tensor& x = input_of(k, 0, cache);
      BatchNormState& bn = nd.bn;
      const int c = bn.channels();
      const long long spatial = product(nd.shape) / c;
      const long long m = static_cast<long long>(n) * spatial;
      const auto& mean = cache.bn_mean[static_cast<std::size_t>(k)];
      const auto& var = cache.bn_var[static_cast<std::size_t>(k)];
      auto& dgamma = cache.bn_dgamma[static_cast<std::size_t>(k)];
      auto& dbeta = cache.bn_dbeta[static_cast<std::size_t>(k)];
      dgamma.assign(static_cast<std::size_t>(c), 0.0);
      dbeta.assign(static_cast<std::size_t>(c), 0.0);

      for (int s = 0; s < n; ++s) {
        const double* xs = x.sample(s);
        const double* ds = dout.sample(s);
        for (int ch = 0; ch < c; ++ch) {
          const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + bn.eps);
          for (long long p = 0; p < spatial; ++p) {
            const double xhat = (xs[ch * spatial + p] - mean[static_cast<std::size_t>(ch)]) * inv;
            dgamma[static_cast<std::size_t>(ch)] += ds[ch * spatial + p] * xhat;
            dbeta[static_cast<std::size_t>(ch)] += ds[ch * spatial + p];
          }
        }
      }
      if (din) {
        for (int s = 0; s < n; ++s) {
          const double* xs = x.sample(s);
          const double* ds = dout.sample(s);
          double* dd = din->sample(s);
          for (int ch = 0; ch < c; ++ch) {
            const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + bn.eps);
            const double g = bn.gamma[static_cast<std::size_t>(ch)];
            const double mg = dgamma[static_cast<std::size_t>(ch)] / static_cast<double>(m);
            const double mb = dbeta[static_cast<std::size_t>(ch)] / static_cast<double>(m);
            for (long long p = 0; p < spatial; ++p) {
              const double xhat = (xs[ch * spatial + p] - mean[static_cast<std::size_t>(ch)]) * inv;
              dd[ch * spatial + p] += g * inv * (ds[ch * spatial + p] - mb - xhat * mg);
            }
          }
        }
      }
      break;
    }
    case LayerKind::kRelu: {
      Tensor* din = grad_of(producer);
      if (!din) return;
      const Tensor& x = input_of(k, 0, cache);
      for (long long i = 0; i < x.numel(); ++i)
        if (x.v[static_cast<std::size_t>(i)] > 0.0)
          din->v[static_cast<std::size_t>(i)] += dout.v[static_cast<std::size_t>(i)];
      break;
    }
    case LayerKind::kResidualAdd: {
      for (int slot = 0; slot < 2; ++slot) {
        Tensor* din = grad_of(nd.in[static_cast<std::size_t>(slot)]);
        if (!din) continue;
        for (long long i = 0; i < dout.numel(); ++i)
          din->v[static_cast<std::size_t>(i)] += dout.v[static_cast<std::size_t>(i)];
      }
      break;
    }
    case LayerKind::kAvgPool: {
      Tensor* din = grad_of(producer);
      if (!din) return;
      const Tensor& x = input_of(k, 0, cache);
      const int c = x.shape[1], h = x.shape[2], w = x.shape[3];
      const int oh = nd.shape[1], ow = nd.shape[2];
      const double inv = 1.0 / (nd.spec.kh * nd.spec.kw);
      for (int s = 0; s < n; ++s) {
        const double* ds = dout.sample(s);
        double* dd = din->sample(s);
        for (int ch = 0; ch < c; ++ch)
          for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
              const double g = ds[(static_cast<std::size_t>(ch) * oh + oy) * ow + ox] * inv;
              for (int r = 0; r < nd.spec.kh; ++r)
                for (int q = 0; q < nd.spec.kw; ++q)
                  dd[(static_cast<std::size_t>(ch) * h + oy * nd.spec.stride + r) * w +
                     ox * nd.spec.stride + q] += g;
            }
      }
      break;
    }
  }
}

ApplyStats Network::apply_updates(double lr, const GradQuantizer& q, const SimClock& clock,
                                  const PassCache& cache) {
  ApplyStats total;
  for (int k = 0; k < size(); ++k) {
    NetNode& nd = nodes_[static_cast<std::size_t>(k)];
    if (nd.backend) {
      total += nd.backend->apply_update(cache.wgrad[static_cast<std::size_t>(k)].data(), lr,
                                        q, clock);
    } else if (nd.spec.kind == LayerKind::kBatchNorm) {
      const auto& dg = cache.bn_dgamma[static_cast<std::size_t>(k)];
      const auto& db = cache.bn_dbeta[static_cast<std::size_t>(k)];
      for (int ch = 0; ch < nd.bn.channels(); ++ch) {
        nd.bn.gamma[static_cast<std::size_t>(ch)] -= lr * dg[static_cast<std::size_t>(ch)];
        nd.bn.beta[static_cast<std::size_t>(ch)] -= lr * db[static_cast<std::size_t>(ch)];
      }
    }
  }
  return total;
}

int Network::refresh_sweep(const SimClock& clock) {
  int refreshed = 0;
  for (NetNode& nd : nodes_)
    if (nd.backend) refreshed += nd.backend->refresh_sweep(clock);
  return refreshed;
}

void Network::begin_batch(double t) {
  for (NetNode& nd : nodes_)
    if (nd.backend) nd.backend->begin_batch(t);
}

bool Network::any_calibrating() const {
  for (const NetNode& nd : nodes_)
    if (nd.backend && nd.backend->calibrating()) return true;
  return false;
}

void Network::freeze_calibration() {
  for (NetNode& nd : nodes_)
    if (nd.backend) nd.backend->freeze_calibration();
}

int Network::calibration_batches() const {
  int m = 0;
  for (const NetNode& nd : nodes_)
    if (nd.backend) m = std::max(m, nd.backend->calibration_batches());
  return m;
}

void Network::size_collector(BnStatsCollector& c) const {
  c.sum.assign(nodes_.size(), {});
  c.sumsq.assign(nodes_.size(), {});
  c.count.assign(nodes_.size(), 0);
  for (int k = 0; k < size(); ++k) {
    const NetNode& nd = nodes_[static_cast<std::size_t>(k)];
    if (nd.spec.kind != LayerKind::kBatchNorm) continue;
    c.sum[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(nd.bn.channels()), 0.0);
    c.sumsq[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(nd.bn.channels()), 0.0);
  }
}

void Network::adopt_bn_stats(const BnStatsCollector& c) {
  for (int k = 0; k < size(); ++k) {
    NetNode& nd = nodes_[static_cast<std::size_t>(k)];
    if (nd.spec.kind != LayerKind::kBatchNorm) continue;
    const long long m = c.count[static_cast<std::size_t>(k)];
    if (m <= 0) throw std::invalid_argument("adabs: empty calibration set");
    for (int ch = 0; ch < nd.bn.channels(); ++ch) {
      const double mu = c.sum[static_cast<std::size_t>(k)][static_cast<std::size_t>(ch)] /
                        static_cast<double>(m);
      const double ex2 = c.sumsq[static_cast<std::size_t>(k)][static_cast<std::size_t>(ch)] /
                         static_cast<double>(m);
      nd.bn.running_mean[static_cast<std::size_t>(ch)] = mu;
      nd.bn.running_var[static_cast<std::size_t>(ch)] = std::max(0.0, ex2 - mu * mu);
    }
  }
}

Network build_network(const std::string& arch, double width_multiplier,
                      const std::vector<int>& input_sample_shape, int classes,
                      const BackendConfig& cfg) {
  if (width_multiplier <= 0.0)
    throw std::invalid_argument("build_network: width multiplier must be > 0");
  std::vector<std::string> tokens;
  {
    std::istringstream ss(arch);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  if (tokens.empty()) throw std::invalid_argument("build_network: empty architecture");

  // The last dense token is the classifier head: exempt from width scaling,
  // pinned to the class count.
  int last_dense = -1;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i)
    if (tokens[static_cast<std::size_t>(i)].rfind("dense:", 0) == 0) last_dense = i;
  if (last_dense < 0)
    throw std::invalid_argument("build_network: architecture needs a final dense layer");

  const auto scale = [&](int v) {
    return std::max(1, static_cast<int>(std::lround(v * width_multiplier)));
  };
  const auto parse_ints = [](const std::string& tok) {
    std::vector<int> out;
    std::size_t pos = tok.find(':');
    while (pos != std::string::npos) {
      const std::size_t next = tok.find(':', pos + 1);
      const std::string part = tok.substr(pos + 1, next == std::string::npos
                                                       ? std::string::npos
                                                       : next - pos - 1);
      out.push_back(std::stoi(part));
      pos = next;
    }
    return out;
  };

  Network net;
  struct PendingRes {
    int remaining;
    int anchor;
  };
  std::vector<PendingRes> pending;
  int last_id = -1;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const std::string& tok = tokens[static_cast<std::size_t>(i)];
    if (tok.rfind("res:", 0) == 0) {
      const auto args = parse_ints(tok);
      if (args.size() != 1 || args[0] < 1)
        throw std::invalid_argument("build_network: res:<n> needs n >= 1");
      pending.push_back(PendingRes{args[0], last_id});
      continue;
    }
    LayerSpec spec;
    if (tok.rfind("dense:", 0) == 0) {
      const auto args = parse_ints(tok);
      if (args.size() != 1) throw std::invalid_argument("build_network: dense:<units>");
      const int units = (i == last_dense) ? classes : scale(args[0]);
      spec = LayerSpec::dense(units);
      if (i == last_dense && args[0] != classes)
        throw std::invalid_argument("build_network: final dense width must equal class count");
    } else if (tok.rfind("conv:", 0) == 0) {
      const auto args = parse_ints(tok);
      if (args.size() < 2 || args.size() > 4)
        throw std::invalid_argument("build_network: conv:<cout>:<k>[:<stride>[:<pad>]]");
      spec = LayerSpec::conv2d(scale(args[0]), args[1], args.size() > 2 ? args[2] : 1,
                               args.size() > 3 ? args[3] : 0);
    } else if (tok == "bn") {
      spec = LayerSpec::batchnorm();
    } else if (tok == "relu") {
      spec = LayerSpec::relu();
    } else if (tok.rfind("avgpool:", 0) == 0) {
      const auto args = parse_ints(tok);
      if (args.size() != 2)
        throw std::invalid_argument("build_network: avgpool:<k>:<stride>");
      spec = LayerSpec::avgpool(args[0], args[1]);
    } else {
      throw std::invalid_argument("build_network: unknown layer token '" + tok + "'");
    }
    last_id = net.add(spec);
    for (auto it = pending.begin(); it != pending.end();) {
      it->remaining -= 1;
      if (it->remaining == 0) {
        last_id = net.add(LayerSpec::residual_add(it->anchor, last_id));
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (!pending.empty())
    throw std::invalid_argument("build_network: res:<n> extends past the last layer");
  net.add(LayerSpec::softmax_xent());
  net.build(input_sample_shape, cfg);
  return net;
}

}  // namespace hicsim
