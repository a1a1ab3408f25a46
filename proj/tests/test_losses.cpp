#include <gtest/gtest.h>

#include <random>

#include "ldenhancer/losses.hpp"
#include "support.hpp"

using namespace ldenhancer;
using lde_test::random_tensor;

namespace {

Tensor<double> rgb(double r, double g, double b, std::size_t side = 16) {
  Tensor<double> t = Tensor<double>::nchw(1, 3, side, side);
  const double c[3] = {r, g, b};
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < side * side; ++i) t.plane(0, ch)[i] = c[ch];
  return t;
}

// Direct evaluation: gray 4x4 region means, every ordered in-bounds
// neighbour pair, averaged over regions.
double spa_oracle(const Tensor<double>& y, const Tensor<double>& o) {
  const std::size_t rh = y.h() / 4, rw = y.w() / 4;
  auto mean = [&](const Tensor<double>& t, std::size_t b, std::size_t r, std::size_t c) {
    double s = 0;
    for (std::size_t ch = 0; ch < t.c(); ++ch)
      for (std::size_t yy = 0; yy < 4; ++yy)
        for (std::size_t xx = 0; xx < 4; ++xx) s += t.at(b, ch, r * 4 + yy, c * 4 + xx);
    return s / (16.0 * t.c());
  };
  double total = 0;
  for (std::size_t b = 0; b < y.n(); ++b)
    for (std::size_t r = 0; r < rh; ++r)
      for (std::size_t c = 0; c < rw; ++c) {
        const int dr[4] = {0, 0, -1, 1}, dc[4] = {-1, 1, 0, 0};
        for (int k = 0; k < 4; ++k) {
          const long nr = static_cast<long>(r) + dr[k], nc = static_cast<long>(c) + dc[k];
          if (nr < 0 || nc < 0 || nr >= static_cast<long>(rh) || nc >= static_cast<long>(rw)) continue;
          const double d = std::abs(mean(y, b, r, c) - mean(y, b, nr, nc)) - std::abs(mean(o, b, r, c) - mean(o, b, nr, nc));
          total += d * d;
        }
      }
  return total / static_cast<double>(y.n() * rh * rw);
}

TEST(LossSpa, ZeroCases) {
  std::mt19937_64 rng(1);
  const auto o = random_tensor({2, 3, 16, 16}, rng, -0.3, 0.3);
  Tensor<double> shifted = o;
  for (auto& v : shifted.values()) v += 0.25;
  EXPECT_NEAR(loss_spa(shifted, o), 0.0, 1e-10);
  EXPECT_NEAR(loss_spa(rgb(0.2, 0.2, 0.2), rgb(0.7, 0.1, 0.4)), 0.0, 1e-10);
}

TEST(LossSpa, TwoRegionToy) {
  // 8x8: left column of regions gray 0.2, right column 0.6; reference flat.
  Tensor<double> y = Tensor<double>::nchw(1, 3, 8, 8);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t x = 0; x < 8; ++x) y.at(0, c, r, x) = x < 4 ? 0.2 : 0.6;
  const Tensor<double> o = Tensor<double>::nchw(1, 3, 8, 8);
  // Each of the 4 regions has one horizontal neighbour at |diff| 0.4; the
  // vertical neighbour differs by 0. Sum 4 * 0.16, averaged over 4 regions.
  EXPECT_NEAR(loss_spa(y, o), 0.16, 1e-12);
  EXPECT_NEAR(loss_spa(y, o), spa_oracle(y, o), 1e-12);
}

TEST(LossSpa, MatchesBruteForceOnRandomInputs) {
  std::mt19937_64 rng(2);
  const auto y = random_tensor({2, 3, 16, 12}, rng, 0.0, 1.0), o = random_tensor({2, 3, 16, 12}, rng, -0.2, 0.2);
  EXPECT_NEAR(loss_spa(y, o), spa_oracle(y, o), 1e-12);
  Tensor<double> y2 = y, o2 = o;
  for (auto& v : y2.values()) v += 0.3;
  for (auto& v : o2.values()) v -= 0.1;
  EXPECT_NEAR(loss_spa(y2, o2), loss_spa(y, o), 1e-12);
}

TEST(LossSpa, Errors) {
  EXPECT_THROW(loss_spa(rgb(0, 0, 0, 8), rgb(0, 0, 0, 16)), ShapeError);
  EXPECT_THROW(loss_spa(rgb(0, 0, 0, 6), rgb(0, 0, 0, 6)), ShapeError);
}

TEST(LossCol, Values) {
  EXPECT_NEAR(loss_col(rgb(0.3, 0.3, 0.3)), 0.0, 1e-10);
  EXPECT_NEAR(loss_col(rgb(1, 0, 0)), 2.0, 1e-12);
  EXPECT_NEAR(loss_col(rgb(0.5, 0.5, 0.7)), 0.08, 1e-12);
  EXPECT_THROW(loss_col(Tensor<double>::nchw(1, 2, 4, 4)), ShapeError);
}

TEST(LossTv, Values) {
  EXPECT_NEAR(loss_tv(rgb(0.4, -0.2, 1.0)), 0.0, 1e-10);
  Tensor<double> two = Tensor<double>::nchw(1, 1, 1, 2);
  two[1] = 1.0;
  EXPECT_NEAR(loss_tv(two), 1.0, 1e-12);

  std::mt19937_64 rng(3);
  const auto m = random_tensor({2, 3, 8, 8}, rng, -2.0, 2.0);
  Tensor<double> neg = m;
  for (auto& v : neg.values()) v = -v;
  EXPECT_DOUBLE_EQ(loss_tv(m), loss_tv(neg));
}

TEST(LossIe, Values) {
  EXPECT_NEAR(loss_ie(rgb(0.6, 0.6, 0.6), 0.6, 1.0, 1.0), 0.0, 1e-10);
  EXPECT_NEAR(loss_ie(rgb(0, 0, 0, 256), 0.6, 1.0, 1.0), 0.18, 1e-12);
  EXPECT_NEAR(loss_ie(rgb(0, 0, 0, 32), 0.6, 1.0, 1.0), 0.18, 1e-12);
  // alpha scales the region mean before comparison with K.
  EXPECT_NEAR(loss_ie(rgb(0.3, 0.3, 0.3), 0.6, 2.0, 1.0), 0.0, 1e-10);
  EXPECT_THROW(loss_ie(rgb(0, 0, 0, 24), 0.6, 1.0, 1.0), ShapeError);
}

TEST(LossLight, Values) {
  const auto label = rgb(0.2, 0.4, 0.1);
  EXPECT_NEAR(loss_light(label, label, 1.0), 0.0, 1e-10);
  EXPECT_NEAR(loss_light(rgb(0.7, 0.9, 0.6), label, 1.0), 0.125, 1e-12);
  EXPECT_NEAR(loss_light(rgb(2.2, 2.4, 2.1), label, 1.0), 1.5, 1e-12);
  EXPECT_THROW(loss_light(rgb(0, 0, 0, 8), label, 1.0), ShapeError);
}

TEST(LossTotal, WeightedSum) {
  const LossWeights w;
  EXPECT_EQ(loss_total({1, 1, 1, 1, 1}, w).total, 27.0);
  EXPECT_EQ(loss_total({0, 0, 0, 0, 0}, w).total, 0.0);
  EXPECT_NEAR(loss_total({0.1, 0, 0, 0.02, 0.3}, w).total, 1.5, 1e-12);
  EXPECT_THROW(loss_total({std::nan(""), 0, 0, 0, 0}, w), ValueError);
  EXPECT_THROW(loss_total({0, 0, INFINITY, 0, 0}, w), ValueError);
}

TEST(LossTotal, LinearInEachPart) {
  const LossWeights w;
  const LossParts base{0.3, 0.2, 0.5, 0.1, 0.7};
  const double coeff[5] = {w.spa, w.col, w.tv, w.ie, w.light};
  for (int k = 0; k < 5; ++k) {
    LossParts p = base;
    double* f[5] = {&p.spa, &p.col, &p.tv, &p.ie, &p.light};
    *f[k] += 1.0;
    EXPECT_NEAR(loss_total(p, w).total - loss_total(base, w).total, coeff[k], 1e-12);
  }
}

TEST(Losses, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0), o = random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
    EXPECT_GE(loss_spa(y, o), 0.0);
    EXPECT_GE(loss_col(y), 0.0);
    EXPECT_GE(loss_tv(o), 0.0);
    EXPECT_GE(loss_ie(y, 0.6, 1.0, 1.0), 0.0);
    EXPECT_GE(loss_light(y, o, 1.0), 0.0);
  }
}

}  // namespace
