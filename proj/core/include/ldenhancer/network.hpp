#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ldenhancer/attention.hpp"
#include "ldenhancer/config.hpp"
#include "ldenhancer/layers.hpp"
#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

enum class MapKind { kSuppression, kEnhancement };

// Four CNR stages (2x2 conv, stride 2) taking 3 channels down to F0.
template <typename T>
struct FeatureExtractor {
  std::array<ConvStage<T>, 4> stages;
  struct Cache {
    std::array<typename ConvStage<T>::Cache, 4> stages;
  };

  FeatureExtractor() = default;
  explicit FeatureExtractor(const NetworkConfig& cfg);
  void init(std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& image, Mode mode, Cache* cache) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& d_features, bool input_grad = false);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);
};

// F1 = 1x1 conv(F0), F2 = F0 - F1.
template <typename T>
struct Decomposition {
  Conv2d<T> conv;

  Decomposition() = default;
  explicit Decomposition(std::size_t channels);
  void init(std::mt19937_64& rng);
  std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f0) const;
  Tensor<T> backward(const Tensor<T>& f0, const Tensor<T>& d_f1, const Tensor<T>& d_f2);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

// Four DCNR stages (2x2 transposed conv, stride 2).
template <typename T>
struct DeconvStack {
  std::array<DeconvStage<T>, 4> stages;
  struct Cache {
    std::array<typename DeconvStage<T>::Cache, 4> stages;
  };

  DeconvStack() = default;
  DeconvStack(std::size_t in_channels, const std::vector<std::size_t>& widths);
  void init(std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);
};

// Image content refinement: cross-attention of F2 over F1 followed by a
// deconvolution stack producing O1 at image resolution.
template <typename T>
struct ContentRefiner {
  CrossAttention<T> attention;
  DeconvStack<T> deconv;
  struct Cache {
    typename CrossAttention<T>::Cache attention;
    typename DeconvStack<T>::Cache deconv;
  };

  ContentRefiner() = default;
  explicit ContentRefiner(const NetworkConfig& cfg);
  void init(std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& f2, const Tensor<T>& f1, Mode mode, Cache* cache) const;
  void backward(const Cache& cache, const Tensor<T>& d_o1, Tensor<T>& d_f2, Tensor<T>& d_f1);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out);
};

// Light distribution generation: F1 -> O2 through four DCNR stages.
template <typename T>
using LightGenerator = DeconvStack<T>;

// Five 3x3 conv layers; the last two consume channel concatenations
// (Conv3 & Conv2, Conv4 & Conv1). Output is tanh-bounded.
template <typename T>
struct ParameterEstimator {
  std::array<Conv2d<T>, 5> convs;
  struct Cache {
    Tensor<T> input, c1, c2, c3, cat32, c4, cat41, output;
  };

  ParameterEstimator() = default;
  ParameterEstimator(std::size_t in_channels, std::size_t width);
  void init(std::mt19937_64& rng);
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& d_map, bool input_grad = true);
  void collect(const std::string& prefix, std::vector<NamedParameter<T>>& out);
};

template <typename T>
struct ForwardResult {
  Tensor<T> suppression;   // P_S
  Tensor<T> enhancement;   // P_E
  Tensor<T> light;         // O2
  Tensor<T> content;       // O1
  Tensor<T> f0, f1, f2;
};

template <typename T>
struct Tape {
  typename FeatureExtractor<T>::Cache extractor;
  typename ContentRefiner<T>::Cache refiner;
  typename DeconvStack<T>::Cache light;
  typename ParameterEstimator<T>::Cache suppression;
  typename ParameterEstimator<T>::Cache enhancement;
  Tensor<T> f0;
};

template <typename T>
class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  const NetworkConfig& config() const { return config_; }

  // Pure in both modes; batch statistics are applied to the running
  // averages only through update_running_stats.
  ForwardResult<T> forward(const Tensor<T>& images, Mode mode = Mode::kEval, Tape<T>* tape = nullptr) const;
  // Accumulates parameter gradients from dL/dP_S, dL/dP_E and dL/dO2.
  void backward(const Tape<T>& tape, const Tensor<T>& d_suppression, const Tensor<T>& d_enhancement,
                const Tensor<T>& d_light);
  void update_running_stats(const Tape<T>& tape);
  void zero_grad();

  std::vector<NamedParameter<T>> parameters();
  std::vector<NamedBuffer<T>> buffers();

  template <typename U>
  void copy_weights_from(Network<U>& other);

  FeatureExtractor<T> extractor;
  Decomposition<T> decomposition;
  ContentRefiner<T> refiner;
  LightGenerator<T> light;
  ParameterEstimator<T> suppression;
  ParameterEstimator<T> enhancement;

 private:
  NetworkConfig config_;
};

template <typename T>
template <typename U>
void Network<T>::copy_weights_from(Network<U>& other) {
  auto dst = parameters();
  auto src = other.parameters();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].param->value = src[i].param->value.template cast<T>();
  auto dbuf = buffers();
  auto sbuf = other.buffers();
  for (std::size_t i = 0; i < dbuf.size(); ++i) *dbuf[i].tensor = sbuf[i].tensor->template cast<T>();
}

}  // namespace ldenhancer
