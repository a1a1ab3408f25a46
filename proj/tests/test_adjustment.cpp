#include <gtest/gtest.h>

#include <random>

#include "ldenhancer/adjustment.hpp"
#include "support.hpp"

using namespace ldenhancer;
using lde_test::random_tensor;

namespace {

Tensor<double> filled(double v, Dims d = {1, 3, 4, 4}) { return Tensor<double>(std::move(d), v); }

TEST(Adjustment, ScalarExample) {
  const auto trace = interweave_adjust(filled(0.5, {1, 1, 1, 1}), filled(0.1, {1, 1, 1, 1}), filled(0.9, {1, 1, 1, 1}), 1);
  EXPECT_NEAR(trace.result()[0], 0.7, 1e-15);
  ASSERT_EQ(trace.frames.size(), 2u);
  EXPECT_EQ(trace.iterations, 1u);
}

TEST(Adjustment, EqualMapsAreIdentity) {
  std::mt19937_64 rng(3);
  const auto img = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  const auto p = random_tensor({2, 3, 8, 8}, rng);
  const auto trace = interweave_adjust(img, p, p, 8);
  EXPECT_EQ(trace.result(), img);
}

TEST(Adjustment, ZeroAndOneAreFixedPoints) {
  std::mt19937_64 rng(4);
  Tensor<double> img = random_tensor({1, 3, 8, 8}, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = i % 2 ? 1.0 : 0.0;
  const auto ps = random_tensor(img.dims(), rng), pe = random_tensor(img.dims(), rng);
  for (std::size_t n : {1u, 3u, 8u, 20u}) EXPECT_EQ(interweave_adjust(img, ps, pe, n).result(), img);
}

TEST(Adjustment, OutputStaysInUnitRangeAndCountsClamps) {
  // 0.75 + 2 * 0.75 * 0.25 = 1.125 before the clamp.
  const auto trace = interweave_adjust(filled(0.75, {1, 1, 1, 1}), filled(-1, {1, 1, 1, 1}), filled(1, {1, 1, 1, 1}), 1);
  EXPECT_EQ(trace.result()[0], 1.0);
  EXPECT_EQ(trace.clamp_events, 1u);

  std::mt19937_64 rng(5);
  const auto img = random_tensor({2, 3, 16, 16}, rng, 0.0, 1.0);
  const auto ps = random_tensor(img.dims(), rng), pe = random_tensor(img.dims(), rng);
  const auto t = interweave_adjust(img, ps, pe, 8);
  for (const auto& f : t.frames)
    for (double v : f.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(Adjustment, StepDirectionFollowsSignOfDifference) {
  std::mt19937_64 rng(6);
  const auto img = random_tensor({1, 3, 8, 8}, rng, 0.01, 0.99);
  const auto ps = random_tensor(img.dims(), rng), pe = random_tensor(img.dims(), rng);
  const auto next = interweave_adjust(img, ps, pe, 1).result();
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double d = pe[i] - ps[i];
    if (d > 0) {
      EXPECT_GT(next[i], img[i]);
    } else if (d < 0) {
      EXPECT_LT(next[i], img[i]);
    }
  }
}

TEST(Adjustment, ClampedEntriesPassNoGradient) {
  const auto trace = interweave_adjust(filled(0.75, {1, 1, 1, 1}), filled(-1, {1, 1, 1, 1}), filled(1, {1, 1, 1, 1}), 1);
  const auto g = interweave_adjust_backward(trace, filled(1.0, {1, 1, 1, 1}));
  EXPECT_EQ(g.image[0], 0.0);
  EXPECT_EQ(g.suppression[0], 0.0);
  EXPECT_EQ(g.enhancement[0], 0.0);
}

TEST(Adjustment, Errors) {
  EXPECT_THROW(interweave_adjust(filled(0.5), filled(0, {1, 3, 4, 5}), filled(0), 1), ShapeError);
  EXPECT_THROW(interweave_adjust(filled(0.5), filled(0), filled(0), 0), ValueError);
}

}  // namespace
