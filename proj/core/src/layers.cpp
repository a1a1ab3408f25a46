#include "ldenhancer/layers.hpp"

#include <cmath>

#include "eigen_views.hpp"

namespace ldenhancer {

using detail::cview;
using detail::Matrix;
using detail::view;

namespace {

void require_rank4(const Dims& d, std::size_t channels, const char* what) {
  if (d.size() != 4 || d[1] != channels) {
    throw ShapeError(std::string(what) + ": expected N x " + std::to_string(channels) +
                     " x H x W input, got " + to_string(d));
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p)
    : in_channels(in),
      out_channels(out),
      kernel(k),
      stride(s),
      padding(p),
      weight(Dims{out, in, k, k}),
      bias(Dims{out}) {
  if (in == 0 || out == 0 || k == 0 || s == 0) throw ShapeError("conv2d: zero-sized layer");
  if (!(s == 1 || (s == k && p == 0))) {
    throw ShapeError("conv2d: only stride 1 or non-overlapping stride == kernel is supported");
  }
}

template <typename T>
void Conv2d<T>::init(std::mt19937_64& rng) {
  init_normal(weight.value, rng);
  bias.value.fill(T(0));
}

template <typename T>
Dims Conv2d<T>::output_dims(const Dims& input) const {
  require_rank4(input, in_channels, "conv2d");
  const std::size_t h = input[2], w = input[3];
  if (stride == 1) {
    if (h + 2 * padding < kernel || w + 2 * padding < kernel) throw ShapeError("conv2d: input too small");
    return {input[0], out_channels, h + 2 * padding - kernel + 1, w + 2 * padding - kernel + 1};
  }
  if (h % stride != 0 || w % stride != 0) {
    throw ShapeError("conv2d: spatial size " + to_string(input) + " not divisible by stride " +
                     std::to_string(stride));
  }
  return {input[0], out_channels, h / stride, w / stride};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  const Dims od = output_dims(x.dims());
  Tensor<T> y(od);
  const auto N = x.n(), H = x.h(), W = x.w(), Ho = od[2], Wo = od[3];
  const auto Ci = static_cast<Eigen::Index>(in_channels);
  const auto Co = static_cast<Eigen::Index>(out_channels);
  const std::size_t kk = kernel * kernel;

  if (stride == 1) {
    const std::size_t Hp = H + 2 * padding, Wp = W + 2 * padding;
    const std::size_t padded_plane = Hp * Wp + kernel;
    const auto cols = static_cast<Eigen::Index>(Ho * Wp);
    std::vector<Matrix<T>> taps(kk, Matrix<T>(Co, Ci));
    for (Eigen::Index o = 0; o < Co; ++o)
      for (Eigen::Index i = 0; i < Ci; ++i)
        for (std::size_t t = 0; t < kk; ++t)
          taps[t](o, i) = weight.value[(o * Ci + i) * kk + t];

    std::vector<T> padded(in_channels * padded_plane);
    Matrix<T> out(Co, cols);
    for (std::size_t b = 0; b < N; ++b) {
      std::fill(padded.begin(), padded.end(), T(0));
      for (std::size_t c = 0; c < in_channels; ++c) {
        const T* src = x.plane(b, c);
        T* dst = padded.data() + c * padded_plane;
        for (std::size_t r = 0; r < H; ++r)
          std::copy_n(src + r * W, W, dst + (r + padding) * Wp + padding);
      }
      out.setZero();
      for (std::size_t t = 0; t < kk; ++t) {
        const std::size_t off = (t / kernel) * Wp + (t % kernel);
        out.noalias() += taps[t] * cview(padded.data() + off, Ci, cols, padded_plane);
      }
      for (std::size_t o = 0; o < out_channels; ++o) {
        T* dst = y.plane(b, o);
        const T bo = bias.value[o];
        for (std::size_t r = 0; r < Ho; ++r)
          for (std::size_t q = 0; q < Wo; ++q) dst[r * Wo + q] = out(o, r * Wp + q) + bo;
      }
    }
    return y;
  }

  const auto rows = static_cast<Eigen::Index>(in_channels * kk);
  const auto cols = static_cast<Eigen::Index>(Ho * Wo);
  Matrix<T> patches(rows, cols);
  auto wm = cview(weight.value.data(), Co, rows);
  for (std::size_t b = 0; b < N; ++b) {
    for (std::size_t c = 0; c < in_channels; ++c) {
      const T* src = x.plane(b, c);
      for (std::size_t a = 0; a < kernel; ++a)
        for (std::size_t e = 0; e < kernel; ++e) {
          T* row = patches.data() + (c * kk + a * kernel + e) * cols;
          for (std::size_t r = 0; r < Ho; ++r)
            for (std::size_t q = 0; q < Wo; ++q) row[r * Wo + q] = src[(r * kernel + a) * W + q * kernel + e];
        }
    }
    auto out = view(y.sample(b), Co, cols);
    out.noalias() = wm * patches;
    for (Eigen::Index o = 0; o < Co; ++o) out.row(o).array() += bias.value[o];
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool input_grad) {
  const Dims od = output_dims(x.dims());
  if (dy.dims() != od) throw ShapeError("conv2d backward: gradient shape " + to_string(dy.dims()));
  const auto N = x.n(), H = x.h(), W = x.w(), Ho = od[2], Wo = od[3];
  const auto Ci = static_cast<Eigen::Index>(in_channels);
  const auto Co = static_cast<Eigen::Index>(out_channels);
  const std::size_t kk = kernel * kernel;
  Tensor<T> dx;
  if (input_grad) dx = Tensor<T>(x.dims());

  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t o = 0; o < out_channels; ++o) {
      const T* g = dy.plane(b, o);
      T s = 0;
      for (std::size_t i = 0; i < Ho * Wo; ++i) s += g[i];
      bias.grad[o] += s;
    }

  if (stride == 1) {
    const std::size_t Hp = H + 2 * padding, Wp = W + 2 * padding;
    const std::size_t padded_plane = Hp * Wp + kernel;
    const auto cols = static_cast<Eigen::Index>(Ho * Wp);
    std::vector<Matrix<T>> taps;
    if (input_grad) {
      taps.assign(kk, Matrix<T>(Co, Ci));
      for (Eigen::Index o = 0; o < Co; ++o)
        for (Eigen::Index i = 0; i < Ci; ++i)
          for (std::size_t t = 0; t < kk; ++t) taps[t](o, i) = weight.value[(o * Ci + i) * kk + t];
    }
    std::vector<T> padded(in_channels * padded_plane);
    std::vector<T> dpadded;
    if (input_grad) dpadded.resize(padded.size());
    Matrix<T> gout(Co, cols);
    Matrix<T> dw(Co, Ci);
    for (std::size_t b = 0; b < N; ++b) {
      std::fill(padded.begin(), padded.end(), T(0));
      for (std::size_t c = 0; c < in_channels; ++c) {
        const T* src = x.plane(b, c);
        T* dst = padded.data() + c * padded_plane;
        for (std::size_t r = 0; r < H; ++r)
          std::copy_n(src + r * W, W, dst + (r + padding) * Wp + padding);
      }
      gout.setZero();
      for (std::size_t o = 0; o < out_channels; ++o) {
        const T* g = dy.plane(b, o);
        for (std::size_t r = 0; r < Ho; ++r)
          for (std::size_t q = 0; q < Wo; ++q) gout(o, r * Wp + q) = g[r * Wo + q];
      }
      if (input_grad) std::fill(dpadded.begin(), dpadded.end(), T(0));
      for (std::size_t t = 0; t < kk; ++t) {
        const std::size_t off = (t / kernel) * Wp + (t % kernel);
        dw.noalias() = gout * cview(padded.data() + off, Ci, cols, padded_plane).transpose();
        for (Eigen::Index o = 0; o < Co; ++o)
          for (Eigen::Index i = 0; i < Ci; ++i) weight.grad[(o * Ci + i) * kk + t] += dw(o, i);
        if (input_grad) {
          view(dpadded.data() + off, Ci, cols, padded_plane).noalias() += taps[t].transpose() * gout;
        }
      }
      if (input_grad) {
        for (std::size_t c = 0; c < in_channels; ++c) {
          const T* src = dpadded.data() + c * padded_plane;
          T* dst = dx.plane(b, c);
          for (std::size_t r = 0; r < H; ++r)
            std::copy_n(src + (r + padding) * Wp + padding, W, dst + r * W);
        }
      }
    }
    return dx;
  }

  const auto rows = static_cast<Eigen::Index>(in_channels * kk);
  const auto cols = static_cast<Eigen::Index>(Ho * Wo);
  Matrix<T> patches(rows, cols);
  Matrix<T> dpatches;
  auto wm = cview(weight.value.data(), Co, rows);
  auto dwm = view(weight.grad.data(), Co, rows);
  for (std::size_t b = 0; b < N; ++b) {
    for (std::size_t c = 0; c < in_channels; ++c) {
      const T* src = x.plane(b, c);
      for (std::size_t a = 0; a < kernel; ++a)
        for (std::size_t e = 0; e < kernel; ++e) {
          T* row = patches.data() + (c * kk + a * kernel + e) * cols;
          for (std::size_t r = 0; r < Ho; ++r)
            for (std::size_t q = 0; q < Wo; ++q) row[r * Wo + q] = src[(r * kernel + a) * W + q * kernel + e];
        }
    }
    auto g = cview(dy.sample(b), Co, cols);
    dwm.noalias() += g * patches.transpose();
    if (!input_grad) continue;
    dpatches.noalias() = wm.transpose() * g;
    for (std::size_t c = 0; c < in_channels; ++c) {
      T* dst = dx.plane(b, c);
      for (std::size_t a = 0; a < kernel; ++a)
        for (std::size_t e = 0; e < kernel; ++e) {
          const T* row = dpatches.data() + (c * kk + a * kernel + e) * cols;
          for (std::size_t r = 0; r < Ho; ++r)
            for (std::size_t q = 0; q < Wo; ++q) dst[(r * kernel + a) * W + q * kernel + e] = row[r * Wo + q];
        }
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

// -------------------------------------------------------------- Deconv2d

template <typename T>
Deconv2d<T>::Deconv2d(std::size_t in, std::size_t out, std::size_t k)
    : in_channels(in), out_channels(out), kernel(k), weight(Dims{in, out, k, k}), bias(Dims{out}) {
  if (in == 0 || out == 0 || k == 0) throw ShapeError("deconv2d: zero-sized layer");
}

template <typename T>
void Deconv2d<T>::init(std::mt19937_64& rng) {
  init_normal(weight.value, rng);
  bias.value.fill(T(0));
}

template <typename T>
Dims Deconv2d<T>::output_dims(const Dims& input) const {
  require_rank4(input, in_channels, "deconv2d");
  return {input[0], out_channels, input[2] * kernel, input[3] * kernel};
}

template <typename T>
Tensor<T> Deconv2d<T>::forward(const Tensor<T>& x) const {
  const Dims od = output_dims(x.dims());
  Tensor<T> y(od);
  const auto H = x.h(), W = x.w(), Wo = od[3];
  const std::size_t kk = kernel * kernel;
  const auto Ci = static_cast<Eigen::Index>(in_channels);
  const auto rows = static_cast<Eigen::Index>(out_channels * kk);
  const auto cols = static_cast<Eigen::Index>(H * W);
  auto a = cview(weight.value.data(), Ci, rows);
  Matrix<T> z(rows, cols);
  for (std::size_t b = 0; b < x.n(); ++b) {
    z.noalias() = a.transpose() * cview(x.sample(b), Ci, cols);
    for (std::size_t o = 0; o < out_channels; ++o) {
      T* dst = y.plane(b, o);
      const T bo = bias.value[o];
      for (std::size_t p = 0; p < kernel; ++p)
        for (std::size_t e = 0; e < kernel; ++e) {
          const T* row = z.data() + (o * kk + p * kernel + e) * cols;
          for (std::size_t r = 0; r < H; ++r)
            for (std::size_t q = 0; q < W; ++q) dst[(r * kernel + p) * Wo + q * kernel + e] = row[r * W + q] + bo;
        }
    }
  }
  return y;
}

template <typename T>
Tensor<T> Deconv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool input_grad) {
  const Dims od = output_dims(x.dims());
  if (dy.dims() != od) throw ShapeError("deconv2d backward: gradient shape " + to_string(dy.dims()));
  const auto H = x.h(), W = x.w(), Wo = od[3];
  const std::size_t kk = kernel * kernel;
  const auto Ci = static_cast<Eigen::Index>(in_channels);
  const auto rows = static_cast<Eigen::Index>(out_channels * kk);
  const auto cols = static_cast<Eigen::Index>(H * W);
  auto a = cview(weight.value.data(), Ci, rows);
  auto da = view(weight.grad.data(), Ci, rows);
  Tensor<T> dx;
  if (input_grad) dx = Tensor<T>(x.dims());
  Matrix<T> dz(rows, cols);
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      const T* src = dy.plane(b, o);
      T s = 0;
      for (std::size_t p = 0; p < kernel; ++p)
        for (std::size_t e = 0; e < kernel; ++e) {
          T* row = dz.data() + (o * kk + p * kernel + e) * cols;
          for (std::size_t r = 0; r < H; ++r)
            for (std::size_t q = 0; q < W; ++q) {
              const T g = src[(r * kernel + p) * Wo + q * kernel + e];
              row[r * W + q] = g;
              s += g;
            }
        }
      bias.grad[o] += s;
    }
    auto xs = cview(x.sample(b), Ci, cols);
    da.noalias() += xs * dz.transpose();
    if (input_grad) view(dx.sample(b), Ci, cols).noalias() = a * dz;
  }
  return dx;
}

template <typename T>
void Deconv2d<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t c)
    : channels(c), gamma(Dims{c}), beta(Dims{c}), running_mean(Dims{c}), running_var(Dims{c}, T(1)) {
  gamma.value.fill(T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode, BatchNormCache<T>* cache) const {
  require_rank4(x.dims(), channels, "batch_norm");
  const std::size_t N = x.n(), P = x.plane_size();
  Tensor<T> y(x.dims());
  Tensor<T> xhat(x.dims());
  std::vector<double> mean(channels), var(channels), inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (mode == Mode::kTrain) {
      double s = 0;
      for (std::size_t b = 0; b < N; ++b) {
        const T* p = x.plane(b, c);
        for (std::size_t i = 0; i < P; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(N * P);
      double v = 0;
      for (std::size_t b = 0; b < N; ++b) {
        const T* p = x.plane(b, c);
        for (std::size_t i = 0; i < P; ++i) v += (p[i] - m) * (p[i] - m);
      }
      mean[c] = m;
      var[c] = v / static_cast<double>(N * P);
    } else {
      mean[c] = running_mean[c];
      var[c] = running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var[c] + kEps);
    const T m = static_cast<T>(mean[c]), is = static_cast<T>(inv_std[c]);
    const T g = gamma.value[c], be = beta.value[c];
    for (std::size_t b = 0; b < N; ++b) {
      const T* p = x.plane(b, c);
      T* h = xhat.plane(b, c);
      T* o = y.plane(b, c);
      for (std::size_t i = 0; i < P; ++i) {
        h[i] = (p[i] - m) * is;
        o[i] = g * h[i] + be;
      }
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->inv_std = std::move(inv_std);
    cache->count = N * P;
    cache->mode = mode;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const BatchNormCache<T>& cache, const Tensor<T>& dy) {
  const Tensor<T>& xhat = cache.normalized;
  Tensor<T>::require_same_shape(xhat, dy, "batch_norm backward");
  const std::size_t N = dy.n(), P = dy.plane_size();
  Tensor<T> dx(dy.dims());
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t b = 0; b < N; ++b) {
      const T* g = dy.plane(b, c);
      const T* h = xhat.plane(b, c);
      for (std::size_t i = 0; i < P; ++i) {
        sum_dy += g[i];
        sum_dy_xhat += g[i] * h[i];
      }
    }
    gamma.grad[c] += static_cast<T>(sum_dy_xhat);
    beta.grad[c] += static_cast<T>(sum_dy);
    const T scale = static_cast<T>(gamma.value[c] * cache.inv_std[c]);
    if (cache.mode == Mode::kTrain) {
      const T mean_dy = static_cast<T>(sum_dy / static_cast<double>(cache.count));
      const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / static_cast<double>(cache.count));
      for (std::size_t b = 0; b < N; ++b) {
        const T* g = dy.plane(b, c);
        const T* h = xhat.plane(b, c);
        T* d = dx.plane(b, c);
        for (std::size_t i = 0; i < P; ++i) d[i] = scale * (g[i] - mean_dy - h[i] * mean_dy_xhat);
      }
    } else {
      for (std::size_t b = 0; b < N; ++b) {
        const T* g = dy.plane(b, c);
        T* d = dx.plane(b, c);
        for (std::size_t i = 0; i < P; ++i) d[i] = scale * g[i];
      }
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::update_running_stats(const BatchNormCache<T>& cache) {
  if (cache.mode != Mode::kTrain) return;
  const double n = static_cast<double>(cache.count);
  const double unbias = n > 1 ? n / (n - 1) : 1.0;
  for (std::size_t c = 0; c < channels; ++c) {
    running_mean[c] = static_cast<T>((1 - kMomentum) * running_mean[c] + kMomentum * cache.mean[c]);
    running_var[c] = static_cast<T>((1 - kMomentum) * running_var[c] + kMomentum * cache.var[c] * unbias);
  }
}

template <typename T>
void BatchNorm2d<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  out.push_back({prefix + ".weight", &gamma});
  out.push_back({prefix + ".bias", &beta});
}

template <typename T>
void BatchNorm2d<T>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

// ----------------------------------------------------------- activations

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.values()) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (!(y[i] > T(0))) dy[i] = T(0);
}

template <typename T>
void tanh_inplace(Tensor<T>& x) {
  for (auto& v : x.values()) v = std::tanh(v);
}

template <typename T>
void tanh_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= T(1) - y[i] * y[i];
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_channels: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  Tensor<T> out(Dims{a.n(), a.c() + b.c(), a.h(), a.w()});
  for (std::size_t n = 0; n < a.n(); ++n) {
    std::copy_n(a.sample(n), a.sample_size(), out.sample(n));
    std::copy_n(b.sample(n), b.sample_size(), out.sample(n) + a.sample_size());
  }
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& d, std::size_t first_channels, Tensor<T>& da, Tensor<T>& db) {
  const std::size_t second = d.c() - first_channels;
  da = Tensor<T>(Dims{d.n(), first_channels, d.h(), d.w()});
  db = Tensor<T>(Dims{d.n(), second, d.h(), d.w()});
  for (std::size_t n = 0; n < d.n(); ++n) {
    std::copy_n(d.sample(n), da.sample_size(), da.sample(n));
    std::copy_n(d.sample(n) + da.sample_size(), db.sample_size(), db.sample(n));
  }
}

// ------------------------------------------------------ NormalizedStage

template <typename T, template <typename> class Op>
Tensor<T> NormalizedStage<T, Op>::forward(const Tensor<T>& x, Mode mode, Cache* cache) const {
  Tensor<T> y = bn.forward(op.forward(x), mode, cache ? &cache->bn : nullptr);
  relu_inplace(y);
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

template <typename T, template <typename> class Op>
Tensor<T> NormalizedStage<T, Op>::backward(const Cache& cache, Tensor<T> dy, bool input_grad) {
  relu_backward_inplace(cache.output, dy);
  Tensor<T> d = bn.backward(cache.bn, dy);
  return op.backward(cache.input, d, input_grad);
}

template <typename T, template <typename> class Op>
void NormalizedStage<T, Op>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  op.collect(prefix + ".conv", out);
  bn.collect(prefix + ".bn", out);
}

template <typename T, template <typename> class Op>
void NormalizedStage<T, Op>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
  bn.collect_buffers(prefix + ".bn", out);
}

#define LDE_INSTANTIATE(T)                                                                     \
  template struct Conv2d<T>;                                                                   \
  template struct Deconv2d<T>;                                                                 \
  template struct BatchNorm2d<T>;                                                              \
  template struct NormalizedStage<T, Conv2d>;                                                  \
  template struct NormalizedStage<T, Deconv2d>;                                                \
  template void relu_inplace<T>(Tensor<T>&);                                                   \
  template void relu_backward_inplace<T>(const Tensor<T>&, Tensor<T>&);                        \
  template void tanh_inplace<T>(Tensor<T>&);                                                   \
  template void tanh_backward_inplace<T>(const Tensor<T>&, Tensor<T>&);                        \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template void split_channels<T>(const Tensor<T>&, std::size_t, Tensor<T>&, Tensor<T>&);

LDE_INSTANTIATE(float)
LDE_INSTANTIATE(double)
#undef LDE_INSTANTIATE

}  // namespace ldenhancer
