#include "ldenhancer/losses.hpp"

#include <cmath>
#include <vector>

namespace ldenhancer {

namespace {

template <typename T>
void require_image(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4 || t.c() == 0 || t.h() == 0 || t.w() == 0) {
    throw ShapeError(std::string(what) + ": expected N x C x H x W, got " + to_string(t.dims()));
  }
}

template <typename T>
void prepare_grad(Tensor<T>* grad, const Tensor<T>& like) {
  if (grad) *grad = Tensor<T>(like.dims());
}

// Channel-mean of sample b averaged over region x region tiles.
template <typename T>
std::vector<double> region_gray_means(const Tensor<T>& t, std::size_t b, std::size_t region) {
  const std::size_t H = t.h(), W = t.w(), rh = H / region, rw = W / region;
  std::vector<double> out(rh * rw, 0.0);
  for (std::size_t c = 0; c < t.c(); ++c) {
    const T* p = t.plane(b, c);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out[(y / region) * rw + x / region] += p[y * W + x];
  }
  const double scale = 1.0 / static_cast<double>(region * region * t.c());
  for (auto& v : out) v *= scale;
  return out;
}

// Spreads a per-region gradient back onto every pixel and channel.
template <typename T>
void scatter_region_grad(Tensor<T>& grad, std::size_t b, std::size_t region, const std::vector<double>& d_region) {
  const std::size_t H = grad.h(), W = grad.w(), rw = W / region;
  const double scale = 1.0 / static_cast<double>(region * region * grad.c());
  for (std::size_t c = 0; c < grad.c(); ++c) {
    T* g = grad.plane(b, c);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) g[y * W + x] += static_cast<T>(d_region[(y / region) * rw + x / region] * scale);
  }
}

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

template <typename T>
double loss_spa(const Tensor<T>& enhanced, const Tensor<T>& reference, Tensor<T>* grad) {
  require_image(enhanced, "loss_spa");
  Tensor<T>::require_same_shape(enhanced, reference, "loss_spa");
  constexpr std::size_t kRegion = 4;
  if (enhanced.h() % kRegion != 0 || enhanced.w() % kRegion != 0) {
    throw ShapeError("loss_spa: spatial size must be divisible by 4");
  }
  prepare_grad(grad, enhanced);
  const std::size_t N = enhanced.n(), rh = enhanced.h() / kRegion, rw = enhanced.w() / kRegion;
  const double norm = 1.0 / static_cast<double>(N * rh * rw);
  double total = 0;
  for (std::size_t b = 0; b < N; ++b) {
    const auto y = region_gray_means(enhanced, b, kRegion);
    const auto o = region_gray_means(reference, b, kRegion);
    std::vector<double> dy(y.size(), 0.0);
    for (std::size_t r = 0; r < rh; ++r)
      for (std::size_t c = 0; c < rw; ++c) {
        const std::size_t i = r * rw + c;
        const std::size_t neighbours[4][2] = {{r, c - 1}, {r, c + 1}, {r - 1, c}, {r + 1, c}};
        for (const auto& nb : neighbours) {
          if (nb[0] >= rh || nb[1] >= rw) continue;  // unsigned wrap covers the -1 case
          const std::size_t j = nb[0] * rw + nb[1];
          const double dyv = y[i] - y[j];
          const double res = std::abs(dyv) - std::abs(o[i] - o[j]);
          total += res * res;
          const double g = 2.0 * res * sign(dyv) * norm;
          dy[i] += g;
          dy[j] -= g;
        }
      }
    if (grad) scatter_region_grad(*grad, b, kRegion, dy);
  }
  return total * norm;
}

template <typename T>
double loss_col(const Tensor<T>& enhanced, Tensor<T>* grad) {
  require_image(enhanced, "loss_col");
  if (enhanced.c() != 3) throw ShapeError("loss_col: expected 3 channels, got " + to_string(enhanced.dims()));
  prepare_grad(grad, enhanced);
  const std::size_t N = enhanced.n(), P = enhanced.plane_size();
  double total = 0;
  for (std::size_t b = 0; b < N; ++b) {
    double mean[3] = {0, 0, 0};
    for (std::size_t c = 0; c < 3; ++c) {
      const T* p = enhanced.plane(b, c);
      for (std::size_t i = 0; i < P; ++i) mean[c] += p[i];
      mean[c] /= static_cast<double>(P);
    }
    const double rg = mean[0] - mean[1], rb = mean[0] - mean[2], gb = mean[1] - mean[2];
    total += rg * rg + rb * rb + gb * gb;
    if (grad) {
      const double dm[3] = {2 * rg + 2 * rb, -2 * rg + 2 * gb, -2 * rb - 2 * gb};
      for (std::size_t c = 0; c < 3; ++c) {
        const T g = static_cast<T>(dm[c] / static_cast<double>(P * N));
        T* d = grad->plane(b, c);
        for (std::size_t i = 0; i < P; ++i) d[i] = g;
      }
    }
  }
  return total / static_cast<double>(N);
}

template <typename T>
double loss_tv(const Tensor<T>& map, Tensor<T>* grad) {
  require_image(map, "loss_tv");
  prepare_grad(grad, map);
  const std::size_t N = map.n(), C = map.c(), H = map.h(), W = map.w();
  const double norm = 1.0 / static_cast<double>(N * C);
  double total = 0;
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const T* p = map.plane(b, c);
      T* g = grad ? grad->plane(b, c) : nullptr;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const std::size_t i = y * W + x;
          const double dx = x + 1 < W ? static_cast<double>(p[i + 1]) - p[i] : 0.0;
          const double dy = y + 1 < H ? static_cast<double>(p[i + W]) - p[i] : 0.0;
          const double s = std::abs(dx) + std::abs(dy);
          total += s * s;
          if (g) {
            const double k = 2.0 * s * norm;
            if (x + 1 < W) {
              g[i + 1] += static_cast<T>(k * sign(dx));
              g[i] -= static_cast<T>(k * sign(dx));
            }
            if (y + 1 < H) {
              g[i + W] += static_cast<T>(k * sign(dy));
              g[i] -= static_cast<T>(k * sign(dy));
            }
          }
        }
    }
  return total * norm;
}

template <typename T>
double loss_ie(const Tensor<T>& enhanced, double exposure_level, double alpha, double beta, std::size_t region_size,
               Tensor<T>* grad) {
  require_image(enhanced, "loss_ie");
  if (region_size == 0 || enhanced.h() % region_size != 0 || enhanced.w() % region_size != 0) {
    throw ShapeError("loss_ie: " + std::to_string(enhanced.h()) + "x" + std::to_string(enhanced.w()) +
                     " cannot be tiled by " + std::to_string(region_size) + "x" + std::to_string(region_size) +
                     " regions");
  }
  prepare_grad(grad, enhanced);
  const std::size_t N = enhanced.n();
  const std::size_t regions = (enhanced.h() / region_size) * (enhanced.w() / region_size);
  const double norm = 1.0 / static_cast<double>(N * regions);
  double total = 0;
  for (std::size_t b = 0; b < N; ++b) {
    const auto e = region_gray_means(enhanced, b, region_size);
    std::vector<double> de(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double d = alpha * e[i] - exposure_level;
      total += smooth_l1(d, beta);
      de[i] = smooth_l1_derivative(d, beta) * alpha * norm;
    }
    if (grad) scatter_region_grad(*grad, b, region_size, de);
  }
  return total * norm;
}

template <typename T>
double loss_light(const Tensor<T>& light, const Tensor<T>& label, double beta, Tensor<T>* grad) {
  Tensor<T>::require_same_shape(light, label, "loss_light");
  if (light.empty()) throw ShapeError("loss_light: empty input");
  prepare_grad(grad, light);
  const double norm = 1.0 / static_cast<double>(light.size());
  double total = 0;
  for (std::size_t i = 0; i < light.size(); ++i) {
    const double d = static_cast<double>(light[i]) - label[i];
    total += smooth_l1(d, beta);
    if (grad) (*grad)[i] = static_cast<T>(smooth_l1_derivative(d, beta) * norm);
  }
  return total * norm;
}

LossReport loss_total(const LossParts& p, const LossWeights& w) {
  for (double v : {p.spa, p.col, p.tv, p.ie, p.light})
    if (!std::isfinite(v)) throw ValueError("loss_total: non-finite loss part");
  LossReport r{p.spa, p.col, p.tv, p.ie, p.light, 0};
  r.total = w.spa * p.spa + w.col * p.col + w.tv * p.tv + w.ie * p.ie + w.light * p.light;
  return r;
}

#define LDE_INSTANTIATE(T)                                                                             \
  template double loss_spa<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                         \
  template double loss_col<T>(const Tensor<T>&, Tensor<T>*);                                           \
  template double loss_tv<T>(const Tensor<T>&, Tensor<T>*);                                            \
  template double loss_ie<T>(const Tensor<T>&, double, double, double, std::size_t, Tensor<T>*);       \
  template double loss_light<T>(const Tensor<T>&, const Tensor<T>&, double, Tensor<T>*);

LDE_INSTANTIATE(float)
LDE_INSTANTIATE(double)
#undef LDE_INSTANTIATE

}  // namespace ldenhancer
