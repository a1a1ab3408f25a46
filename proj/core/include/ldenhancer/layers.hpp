#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

enum class Mode { kEval, kTrain };

// Zero-mean normal weights with std 0.02, zero biases.
inline constexpr double kInitStd = 0.02;

template <typename T>
void init_normal(Tensor<T>& t, std::mt19937_64& rng, double stddev = kInitStd) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

// 2-D convolution over NCHW input. Supports stride 1 with arbitrary padding,
// and non-overlapping patches (stride == kernel, no padding).
template <typename T>
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Parameter<T> weight;  // out x in x k x k
  Parameter<T> bias;    // out

  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p);

  void init(std::mt19937_64& rng);
  Dims output_dims(const Dims& input) const;
  Tensor<T> forward(const Tensor<T>& x) const;
  // Accumulates weight/bias gradients and returns dL/dx (empty when
  // input_grad is false).
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool input_grad = true);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

// Transposed convolution with kernel == stride (2x2 stride 2 upsampling).
template <typename T>
struct Deconv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 2;
  Parameter<T> weight;  // in x out x k x k
  Parameter<T> bias;    // out

  Deconv2d() = default;
  Deconv2d(std::size_t in, std::size_t out, std::size_t k = 2);

  void init(std::mt19937_64& rng);
  Dims output_dims(const Dims& input) const;
  Tensor<T> forward(const Tensor<T>& x) const;
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool input_grad = true);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;
  std::vector<double> mean;
  std::vector<double> var;  // biased batch variance
  std::vector<double> inv_std;
  std::size_t count = 0;  // N * H * W
  Mode mode = Mode::kEval;
};

template <typename T>
struct BatchNorm2d {
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  std::size_t channels = 0;
  Parameter<T> gamma;
  Parameter<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

  BatchNorm2d() = default;
  explicit BatchNorm2d(std::size_t c);

  Tensor<T> forward(const Tensor<T>& x, Mode mode, BatchNormCache<T>* cache) const;
  Tensor<T> backward(const BatchNormCache<T>& cache, const Tensor<T>& dy);
  void update_running_stats(const BatchNormCache<T>& cache);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);
};

template <typename T>
void relu_inplace(Tensor<T>& x);
// dy *= (y > 0)
template <typename T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy);
template <typename T>
void tanh_inplace(Tensor<T>& x);
template <typename T>
void tanh_backward_inplace(const Tensor<T>& y, Tensor<T>& dy);

// Channel concatenation of two NCHW tensors and its adjoint.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void split_channels(const Tensor<T>& d, std::size_t first_channels, Tensor<T>& da, Tensor<T>& db);

// Conv -> batch norm -> ReLU (CNR), or the same with a transposed
// convolution (DCNR).
template <typename T, template <typename> class Op>
struct NormalizedStage {
  Op<T> op;
  BatchNorm2d<T> bn;

  struct Cache {
    Tensor<T> input;
    BatchNormCache<T> bn;
    Tensor<T> output;
  };

  NormalizedStage() = default;
  NormalizedStage(Op<T> o, std::size_t channels) : op(std::move(o)), bn(channels) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) const;
  Tensor<T> backward(const Cache& cache, Tensor<T> dy, bool input_grad = true);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);
};

template <typename T>
using ConvStage = NormalizedStage<T, Conv2d>;
template <typename T>
using DeconvStage = NormalizedStage<T, Deconv2d>;

}  // namespace ldenhancer
