// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "hicsim/nn.hpp"
#include "hicsim/sim_clock.hpp"

using namespace hicsim;

namespace {

BackendConfig fp32_config() {
  BackendConfig cfg;
  cfg.kind = BackendConfig::Kind::kFp32;
  return cfg;
}

BackendConfig hybrid_config(bool converters) {
  BackendConfig cfg;
  cfg.kind = BackendConfig::Kind::kHybrid;
  cfg.crossbar.converter.enabled = converters;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("build infers shapes and validates the graph") {
  Network net;
  net.add(LayerSpec::conv2d(4, 3, 1, 1));
  net.add(LayerSpec::batchnorm());
  net.add(LayerSpec::relu());
  net.add(LayerSpec::avgpool(2, 2));
  net.add(LayerSpec::dense(3));
  net.add(LayerSpec::softmax_xent());
  net.build({2, 6, 6}, fp32_config());

  CHECK(net.node(0).shape == std::vector<int>{4, 6, 6});
  CHECK(net.node(1).shape == std::vector<int>{4, 6, 6});
  CHECK(net.node(3).shape == std::vector<int>{4, 3, 3});
  CHECK(net.node(4).shape == std::vector<int>{3});
  CHECK(net.node(4).backend->rows() == 4 * 3 * 3);
  CHECK(net.classes() == 3);
  CHECK(net.crossbar_params() == 2LL * 3 * 3 * 4 + 4LL * 3 * 3 * 3);
  CHECK(net.digital_params() == 8);

  Network bad;
  bad.add(LayerSpec::dense(4));
  CHECK_THROWS_AS(bad.build({3}, fp32_config()), std::invalid_argument);  // no head

  Network fwdref;
  LayerSpec s = LayerSpec::residual_add(1, 0);
  fwdref.add(s);
  fwdref.add(LayerSpec::softmax_xent());
  CHECK_THROWS_AS(fwdref.build({3}, fp32_config()), std::invalid_argument);
}

TEST_CASE("dense forward matches a hand matmul and flattens images") {
  Network net;
  net.add(LayerSpec::dense(2));
  net.add(LayerSpec::softmax_xent());
  net.build({1, 2, 2}, fp32_config());

  auto* fp = dynamic_cast<Fp32Backend*>(net.node(0).backend.get());
  REQUIRE(fp != nullptr);
  // rows = 4 flattened pixels, cols = 2.
  const std::vector<double> w = {0.5, -1.0, 0.25, 2.0, -0.5, 1.0, 0.0, 3.0};
  SimClock clock;
  fp->program_initial(w, clock);

  Tensor x(std::vector<int>{1, 1, 2, 2});
  x.v = {1.0, 2.0, 3.0, 4.0};
  PassCache cache;
  net.forward(x, {0}, 0.0, ReadMode::kIdeal, false, 1, cache);
  const double y0 = 1.0 * 0.5 + 2.0 * 0.25 + 3.0 * -0.5 + 4.0 * 0.0;
  const double y1 = 1.0 * -1.0 + 2.0 * 2.0 + 3.0 * 1.0 + 4.0 * 3.0;
  CHECK(cache.act[0].v[0] == doctest::Approx(y0).epsilon(1e-15));
  CHECK(cache.act[0].v[1] == doctest::Approx(y1).epsilon(1e-15));
  // Softmax head produces normalized probabilities.
  CHECK(cache.act[1].v[0] + cache.act[1].v[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cache.loss == doctest::Approx(-std::log(cache.act[1].v[0])).epsilon(1e-12));
}

TEST_CASE("batchnorm standardizes batch statistics in training mode") {
  Network net;
  net.add(LayerSpec::dense(5));
  net.add(LayerSpec::batchnorm());
  net.add(LayerSpec::softmax_xent());
  net.build({4}, fp32_config());
  SimClock clock;
  net.init_weights(3, clock);

  const int n = 64;
  std::mt19937 rng(11);
  std::normal_distribution<double> gauss(0.0, 2.0);
  Tensor x(std::vector<int>{n, 4});
  for (auto& v : x.v) v = gauss(rng);
  std::vector<int> labels(n, 0);

  PassCache cache;
  net.forward(x, labels, 0.0, ReadMode::kIdeal, true, 1, cache);

  const Tensor& y = cache.act[1];
  for (int ch = 0; ch < 5; ++ch) {
    double mean = 0.0, var = 0.0;
    for (int s = 0; s < n; ++s) mean += y.sample(s)[ch];
    mean /= n;
    for (int s = 0; s < n; ++s) {
      const double d = y.sample(s)[ch] - mean;
      var += d * d;
    }
    var /= n;
    CHECK(std::abs(mean) < 1e-12);
    // Biased batch variance and epsilon shrink the output variance slightly
    // below one.
    CHECK(var == doctest::Approx(cache.bn_var[1][static_cast<std::size_t>(ch)] /
                                 (cache.bn_var[1][static_cast<std::size_t>(ch)] + 1e-5))
                     .epsilon(1e-10));
  }

  // Running statistics move by one EMA step from their (0, 1) start.
  const BatchNormState& bn = net.node(1).bn;
  for (int ch = 0; ch < 5; ++ch) {
    CHECK(bn.running_mean[static_cast<std::size_t>(ch)] ==
          doctest::Approx(0.1 * cache.bn_mean[1][static_cast<std::size_t>(ch)])
              .epsilon(1e-12));
    CHECK(bn.running_var[static_cast<std::size_t>(ch)] ==
          doctest::Approx(0.9 + 0.1 * cache.bn_var[1][static_cast<std::size_t>(ch)])
              .epsilon(1e-12));
  }

  // Evaluation mode uses the running statistics instead of batch statistics.
  PassCache eval;
  net.forward(x, labels, 0.0, ReadMode::kIdeal, false, 1, eval);
  CHECK(eval.bn_mean[1] == net.node(1).bn.running_mean);
  CHECK(eval.bn_var[1] == net.node(1).bn.running_var);
}

TEST_CASE("analytic gradients match central differences on mixed networks") {
  for (int idx = 0; idx < 6; ++idx) {
    const auto res = hicsim_test::run_gradcheck(idx, 0xC0FFEE + idx, 24);
    CAPTURE(idx);
    CAPTURE(res.checked);
    CAPTURE(res.skipped);
    REQUIRE(res.checked > 0);
    CHECK(res.max_rel_err <= 1e-4);
  }
}

TEST_CASE("adabs collector gathers population statistics without touching EMA") {
  Network net;
  net.add(LayerSpec::dense(3));
  net.add(LayerSpec::batchnorm());
  net.add(LayerSpec::relu());
  net.add(LayerSpec::dense(2));
  net.add(LayerSpec::softmax_xent());
  net.build({4}, fp32_config());
  SimClock clock;
  net.init_weights(21, clock);

  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor x(std::vector<int>{16, 4});
  for (auto& v : x.v) v = gauss(rng);
  std::vector<int> labels(16, 1);

  BnStatsCollector coll;
  net.size_collector(coll);
  const auto ema_before = net.node(1).bn.running_mean;
  PassCache cache;
  net.forward(x, labels, 0.0, ReadMode::kIdeal, false, 1, cache, &coll);
  CHECK(net.node(1).bn.running_mean == ema_before);
  CHECK(coll.count[1] == 16);

  // Adopting replaces running stats with exact population moments of the
  // batchnorm input.
  net.adopt_bn_stats(coll);
  const Tensor& bn_in = cache.act[0];
  for (int ch = 0; ch < 3; ++ch) {
    double mean = 0.0, sq = 0.0;
    for (int s = 0; s < 16; ++s) {
      mean += bn_in.sample(s)[ch];
      sq += bn_in.sample(s)[ch] * bn_in.sample(s)[ch];
    }
    mean /= 16.0;
    sq /= 16.0;
    CHECK(net.node(1).bn.running_mean[static_cast<std::size_t>(ch)] ==
          doctest::Approx(mean).epsilon(1e-12));
    CHECK(net.node(1).bn.running_var[static_cast<std::size_t>(ch)] ==
          doctest::Approx(sq - mean * mean).epsilon(1e-12));
  }
}

TEST_CASE("forward and backward are thread-count invariant") {
  const auto run = [&](int threads) {
    Network net = build_network("dense:12 bn relu dense:8 relu dense:2", 1.0, {6}, 2,
                                hybrid_config(false));
    SimClock clock;
    net.init_weights(77, clock);
    net.begin_batch(0.0);

    std::mt19937 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tensor x(std::vector<int>{20, 6});
    for (auto& v : x.v) v = gauss(rng);
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);

    PassCache cache;
    net.forward(x, labels, 0.0, ReadMode::kNoisy, true, threads, cache);
    net.backward(0.0, ReadMode::kNoisy, threads, cache);
    return cache;
  };

  const PassCache a = run(1);
  const PassCache b = run(8);
  CHECK(a.loss == b.loss);
  for (std::size_t k = 0; k < a.act.size(); ++k) CHECK(a.act[k].v == b.act[k].v);
  for (std::size_t k = 0; k < a.wgrad.size(); ++k) CHECK(a.wgrad[k] == b.wgrad[k]);
}

TEST_CASE("architecture strings build the expected graphs") {
  // Residual connection spans the declared token count.
  Network net = build_network("dense:8 relu res:2 dense:8 relu dense:2", 1.0, {4}, 2,
                              fp32_config());
  REQUIRE(net.size() == 7);
  CHECK(net.node(4).spec.kind == LayerKind::kResidualAdd);
  CHECK(net.node(4).in == std::vector<int>{1, 3});
  CHECK(net.node(6).spec.kind == LayerKind::kSoftmaxXent);

  // Width multiplier scales hidden widths, never the classifier head.
  Network wide =
      build_network("dense:8 relu dense:2", 2.0, {4}, 2, fp32_config());
  CHECK(wide.node(0).shape == std::vector<int>{16});
  CHECK(wide.node(2).shape == std::vector<int>{2});
  Network narrow =
      build_network("dense:8 relu dense:2", 0.25, {4}, 2, fp32_config());
  CHECK(narrow.node(0).shape == std::vector<int>{2});

  CHECK_THROWS_AS(build_network("dense:8 copper:3 dense:2", 1.0, {4}, 2, fp32_config()),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_network("relu", 1.0, {4}, 2, fp32_config()),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_network("dense:8 relu res:5 dense:2", 1.0, {4}, 2, fp32_config()),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_network("dense:3", 1.0, {4}, 2, fp32_config()),
                  std::invalid_argument);
}

}  // TEST_SUITE
