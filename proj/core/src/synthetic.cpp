#include "ldenhancer/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "ldenhancer/error.hpp"
#include "ldenhancer/image_io.hpp"

namespace ldenhancer {

Tensor<float> synthetic_uneven_frame(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double S = static_cast<double>(size);

  double tint[3];
  for (double& t : tint) t = 0.8 + 0.4 * u(rng);

  // Low-frequency texture: a handful of random plane waves.
  struct Wave {
    double fx, fy, phase, amp;
  };
  Wave waves[6];
  for (auto& w : waves) w = {u(rng) * 12.0 / S, u(rng) * 12.0 / S, u(rng) * 6.283185307179586, 0.005 + 0.01 * u(rng)};

  struct Glow {
    double cx, cy, radius, gain;
  };
  const int glows = 1 + static_cast<int>(u(rng) * 3.0);
  Glow g[3];
  for (int k = 0; k < glows; ++k) g[k] = {u(rng) * S, u(rng) * S, S * (0.05 + 0.12 * u(rng)), 0.5 + 0.4 * u(rng)};
  const int lit_quadrant = static_cast<int>(u(rng) * 4.0);
  const double base = 0.04 + 0.06 * u(rng);

  std::normal_distribution<double> noise(0.0, 0.01);
  Tensor<float> t = Tensor<float>::nchw(1, 3, size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      double v = base;
      for (const auto& w : waves) v += w.amp * (1.0 + std::sin(6.283185307179586 * (w.fx * x + w.fy * y) + w.phase));
      const int quadrant = (y >= size / 2 ? 2 : 0) + (x >= size / 2 ? 1 : 0);
      if (quadrant == lit_quadrant) v *= 2.5;
      for (int k = 0; k < glows; ++k) {
        const double dx = x - g[k].cx, dy = y - g[k].cy;
        v += g[k].gain * std::exp(-(dx * dx + dy * dy) / (2.0 * g[k].radius * g[k].radius));
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double p = v * tint[c] + noise(rng);
        t.at(0, c, y, x) = static_cast<float>(std::clamp(p, 0.0, 1.0));
      }
    }
  return t;
}

Tensor<float> quadrant_probe_frame(std::size_t size, double dark, double bright, std::uint64_t seed) {
  if (size < 2 || size % 2) throw ValueError("quadrant_probe_frame: size must be even, got " + std::to_string(size));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t half = size / 2;
  const double mid = 0.5 * (dark + bright);
  const double level[4] = {dark, mid, mid, bright};
  Tensor<float> t = Tensor<float>::nchw(1, 3, size, size);
  for (int q = 0; q < 4; ++q) {
    const std::size_t y0 = q >= 2 ? half : 0, x0 = q % 2 ? half : 0;
    const double amp = 0.5 * std::min(level[q], 1.0 - level[q]);
    for (std::size_t c = 0; c < 3; ++c) {
      // Zero-mean texture: each sample is paired with its negation.
      for (std::size_t y = 0; y < half; ++y)
        for (std::size_t x = 0; x < half; x += 2) {
          const double d = amp * u(rng);
          t.at(0, c, y0 + y, x0 + x) = static_cast<float>(level[q] + d);
          t.at(0, c, y0 + y, x0 + x + 1) = static_cast<float>(level[q] - d);
        }
    }
  }
  return t;
}

void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count, std::size_t size,
                             std::uint64_t seed) {
  for (std::size_t i = 0; i < count; ++i) {
    char seq[32];
    std::snprintf(seq, sizeof seq, "seq%03zu", i);
    save_image(synthetic_uneven_frame(size, seed * 1000003u + i), root / seq / "000000.png");
  }
}

}  // namespace ldenhancer
