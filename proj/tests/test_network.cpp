#include <gtest/gtest.h>

#include <random>

#include "ldenhancer/config.hpp"
#include "ldenhancer/enhance.hpp"
#include "ldenhancer/network.hpp"
#include "shape_chain.hpp"
#include "support.hpp"

using namespace ldenhancer;
using lde_test::random_tensor;

namespace {

NetworkConfig small_config(std::size_t size = 32) {
  NetworkConfig cfg;
  cfg.input_size = size;
  cfg.seed = 5;
  return cfg;
}

TEST(Network, ShapeChainAt256) {
  const Network<float> net(NetworkConfig{});
  std::mt19937_64 rng(1);
  const auto img = random_tensor<float>({1, 3, 256, 256}, rng, 0.0, 1.0);
  const auto observed = lde_test::observed_stage_shapes(net, img);
  const auto expected = lde_test::expected_stage_shapes_256();
  ASSERT_EQ(observed.size(), 16u);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(observed[i].first, expected[i].first);
    EXPECT_EQ(observed[i].second, expected[i].second) << expected[i].first;
  }
}

TEST(Network, FeatureExtractorHalvesFourTimes) {
  const Network<double> net(small_config());
  std::mt19937_64 rng(2);
  for (std::size_t side : {16u, 32u, 64u}) {
    const auto f0 = net.extractor.forward(random_tensor({2, 3, side, side}, rng, 0.0, 1.0), Mode::kEval, nullptr);
    EXPECT_EQ(f0.dims(), (Dims{2, 8, side / 16, side / 16}));
  }
}

TEST(Network, RangesAndDecompositionIdentity) {
  const Network<double> net(small_config());
  std::mt19937_64 rng(3);
  const auto r = net.forward(random_tensor({2, 3, 32, 32}, rng, 0.0, 1.0), Mode::kTrain);
  for (const auto* m : {&r.suppression, &r.enhancement})
    for (double v : m->values()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  for (double v : r.light.values()) EXPECT_GE(v, 0.0);
  for (std::size_t i = 0; i < r.f0.size(); ++i) EXPECT_NEAR(r.f1[i] + r.f2[i], r.f0[i], 1e-12);
}

TEST(Network, DeterministicAndPure) {
  std::mt19937_64 rng(4);
  const auto img = random_tensor<float>({1, 3, 32, 32}, rng, 0.0, 1.0);
  const Network<float> a(small_config()), b(small_config());
  const auto ra = a.forward(img), rb = b.forward(img), ra2 = a.forward(img, Mode::kTrain), ra3 = a.forward(img);
  EXPECT_EQ(ra.suppression, rb.suppression);
  EXPECT_EQ(ra.enhancement, rb.enhancement);
  // A training-mode pass must not disturb running statistics.
  EXPECT_EQ(ra.suppression, ra3.suppression);
  EXPECT_EQ(ra.enhancement, ra3.enhancement);
}

TEST(Network, BatchEqualsLoopedSingleImagesInEval) {
  const Network<double> net(small_config());
  std::mt19937_64 rng(5);
  const auto batch = random_tensor({4, 3, 32, 32}, rng, 0.0, 1.0);
  const auto all = net.forward(batch);
  for (std::size_t b = 0; b < 4; ++b) {
    Tensor<double> one = Tensor<double>::nchw(1, 3, 32, 32);
    std::copy(batch.sample(b), batch.sample(b) + one.size(), one.sample(0));
    const auto r = net.forward(one);
    for (std::size_t i = 0; i < one.size(); ++i) {
      ASSERT_NEAR(all.suppression.sample(b)[i], r.suppression[i], 1e-12);
      ASSERT_NEAR(all.enhancement.sample(b)[i], r.enhancement[i], 1e-12);
    }
  }
}

TEST(Network, FullyConvolutional) {
  const Network<double> net(small_config());
  std::mt19937_64 rng(6);
  const auto small = net.forward(random_tensor({1, 3, 32, 32}, rng, 0.0, 1.0));
  const auto large = net.forward(random_tensor({1, 3, 64, 64}, rng, 0.0, 1.0));
  EXPECT_EQ(large.f0.h(), 2 * small.f0.h());
  EXPECT_EQ(large.f0.c(), small.f0.c());
  EXPECT_EQ(large.suppression.dims(), (Dims{1, 3, 64, 64}));
}

TEST(Network, ZeroWeightsGiveIdentityEnhancement) {
  Network<float> net(small_config());
  for (auto& p : net.parameters()) p.param->value.fill(0.0f);
  std::mt19937_64 rng(7);
  const auto img = random_tensor<float>({1, 3, 32, 32}, rng, 0.0, 1.0);
  const auto r = net.forward(img);
  for (float v : r.suppression.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(enhance(net, img).trace.result(), img);
}

TEST(Network, Errors) {
  const Network<double> net(small_config());
  EXPECT_THROW(net.forward(Tensor<double>::nchw(1, 4, 32, 32)), ShapeError);
  EXPECT_THROW(net.forward(Tensor<double>::nchw(1, 3, 40, 40)), ShapeError);
  Tensor<double> bad(Dims{1, 3, 32, 32}, 0.5);
  bad[3] = std::nan("");
  EXPECT_THROW(net.forward(bad), ValueError);

  NetworkConfig cfg;
  cfg.attention_heads = 3;
  EXPECT_THROW(Network<float>{cfg}, ValueError);
  cfg = NetworkConfig{};
  cfg.input_size = 100;
  EXPECT_THROW(Network<float>{cfg}, ValueError);
}

TEST(Attention, SoftmaxRowsSumToOne) {
  CrossAttention<double> ca(8, 2, 32);
  std::mt19937_64 rng(8);
  ca.init(rng);
  for (auto* p : {&ca.w_query, &ca.w_key}) p->value = random_tensor(p->value.dims(), rng, -2.0, 2.0);
  typename CrossAttention<double>::Cache cache;
  ca.forward(random_tensor({2, 8, 4, 4}, rng, -3.0, 3.0), random_tensor({2, 8, 4, 4}, rng, -3.0, 3.0), &cache);
  ASSERT_EQ(cache.samples.size(), 2u);
  for (const auto& s : cache.samples) {
    ASSERT_EQ(s.probs.size(), 2u);
    for (const auto& p : s.probs) {
      ASSERT_EQ(p.dims(), (Dims{16, 16}));
      for (std::size_t r = 0; r < 16; ++r) {
        double sum = 0;
        for (std::size_t c = 0; c < 16; ++c) sum += p[r * 16 + c];
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(Attention, SingleTokenAttendsToItself) {
  CrossAttention<double> ca(8, 2, 16);
  std::mt19937_64 rng(9);
  ca.init(rng);
  typename CrossAttention<double>::Cache cache;
  const auto z = ca.forward(random_tensor({1, 8, 1, 1}, rng), random_tensor({1, 8, 1, 1}, rng), &cache);
  EXPECT_EQ(z.dims(), (Dims{1, 8, 1, 1}));
  for (const auto& p : cache.samples[0].probs) EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(Attention, SinusoidalEncodingIsBounded) {
  const auto enc = sinusoidal_encoding<double>(4, 6, 8);
  EXPECT_EQ(enc.dims(), (Dims{24, 8}));
  for (double v : enc.values()) EXPECT_LE(std::abs(v), 1.0);
  // Tokens in the same row share the row half of the encoding.
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(enc[c], enc[5 * 8 + c]);
}

TEST(Config, DefaultsOverridesAndUnknownKeys) {
  const AppConfig d = config_from_json_text("{}");
  EXPECT_EQ(d.network.input_size, 256u);
  EXPECT_EQ(d.train.learning_rate, 1e-6);
  EXPECT_EQ(d.loss.spa, 10.0);
  const AppConfig c = config_from_json_text(R"({"train": {"epochs": 3}})", {"network.input_size=64", "loss.alpha=2"});
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.network.input_size, 64u);
  EXPECT_EQ(c.loss.alpha, 2.0);
  EXPECT_EQ(config_from_json_text(config_to_json_text(c)).network.input_size, 64u);
  EXPECT_THROW(config_from_json_text(R"({"network": {"depth": 3}})"), ValueError);
  EXPECT_THROW(config_from_json_text("{}", {"train.speed=1"}), ValueError);
  EXPECT_THROW(config_from_json_text("{}", {"network.input_size=20"}), ValueError);
  EXPECT_THROW(config_from_json_text("{not json"), ValueError);
}

}  // namespace
