#include "ldenhancer/network.hpp"

namespace ldenhancer {

// ------------------------------------------------------- FeatureExtractor

template <typename T>
FeatureExtractor<T>::FeatureExtractor(const NetworkConfig& cfg) {
  std::size_t in = 3;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t out = cfg.extractor_channels[i];
    stages[i] = ConvStage<T>(Conv2d<T>(in, out, 2, 2, 0), out);
    in = out;
  }
}

template <typename T>
void FeatureExtractor<T>::init(std::mt19937_64& rng) {
  for (auto& s : stages) s.op.init(rng);
}

template <typename T>
Tensor<T> FeatureExtractor<T>::forward(const Tensor<T>& image, Mode mode, Cache* cache) const {
  if (image.rank() != 4 || image.c() != 3) throw ShapeError("feature_extract: expected N x 3 x H x W, got " + to_string(image.dims()));
  if (image.h() == 0 || image.w() == 0 || image.h() % 16 != 0 || image.w() % 16 != 0) {
    throw ShapeError("feature_extract: spatial size " + std::to_string(image.h()) + "x" + std::to_string(image.w()) +
                     " is not divisible by 16");
  }
  if (!image.all_finite()) throw ValueError("feature_extract: non-finite input");
  Tensor<T> x = image;
  for (std::size_t i = 0; i < 4; ++i) x = stages[i].forward(x, mode, cache ? &cache->stages[i] : nullptr);
  return x;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::backward(const Cache& cache, const Tensor<T>& d_features, bool input_grad) {
  Tensor<T> d = d_features;
  for (std::size_t i = 4; i-- > 0;) d = stages[i].backward(cache.stages[i], std::move(d), i > 0 || input_grad);
  return d;
}

template <typename T>
void FeatureExtractor<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  for (std::size_t i = 0; i < 4; ++i) stages[i].collect(prefix + ".stage" + std::to_string(i + 1), out);
}

template <typename T>
void FeatureExtractor<T>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
  for (std::size_t i = 0; i < 4; ++i) stages[i].collect_buffers(prefix + ".stage" + std::to_string(i + 1), out);
}

// ---------------------------------------------------------- Decomposition

template <typename T>
Decomposition<T>::Decomposition(std::size_t channels) : conv(channels, channels, 1, 1, 0) {}

template <typename T>
void Decomposition<T>::init(std::mt19937_64& rng) {
  conv.init(rng);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Decomposition<T>::forward(const Tensor<T>& f0) const {
  if (f0.rank() != 4 || f0.c() != conv.in_channels) {
    throw ShapeError("decompose: expected " + std::to_string(conv.in_channels) + " channels, got " + to_string(f0.dims()));
  }
  Tensor<T> f1 = conv.forward(f0);
  Tensor<T> f2 = f0 - f1;
  return {std::move(f1), std::move(f2)};
}

template <typename T>
Tensor<T> Decomposition<T>::backward(const Tensor<T>& f0, const Tensor<T>& d_f1, const Tensor<T>& d_f2) {
  Tensor<T> d_conv = d_f1 - d_f2;
  Tensor<T> d_f0 = conv.backward(f0, d_conv, true);
  d_f0 += d_f2;
  return d_f0;
}

template <typename T>
void Decomposition<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  conv.collect(prefix, out);
}

// ------------------------------------------------------------ DeconvStack

template <typename T>
DeconvStack<T>::DeconvStack(std::size_t in_channels, const std::vector<std::size_t>& widths) {
  std::size_t in = in_channels;
  for (std::size_t i = 0; i < 4; ++i) {
    stages[i] = DeconvStage<T>(Deconv2d<T>(in, widths[i], 2), widths[i]);
    in = widths[i];
  }
}

template <typename T>
void DeconvStack<T>::init(std::mt19937_64& rng) {
  for (auto& s : stages) s.op.init(rng);
}

template <typename T>
Tensor<T> DeconvStack<T>::forward(const Tensor<T>& x, Mode mode, Cache* cache) const {
  Tensor<T> y = x;
  for (std::size_t i = 0; i < 4; ++i) y = stages[i].forward(y, mode, cache ? &cache->stages[i] : nullptr);
  return y;
}

template <typename T>
Tensor<T> DeconvStack<T>::backward(const Cache& cache, const Tensor<T>& dy) {
  Tensor<T> d = dy;
  for (std::size_t i = 4; i-- > 0;) d = stages[i].backward(cache.stages[i], std::move(d), true);
  return d;
}

template <typename T>
void DeconvStack<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  for (std::size_t i = 0; i < 4; ++i) stages[i].collect(prefix + ".stage" + std::to_string(i + 1), out);
}

template <typename T>
void DeconvStack<T>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
  for (std::size_t i = 0; i < 4; ++i) stages[i].collect_buffers(prefix + ".stage" + std::to_string(i + 1), out);
}

// --------------------------------------------------------- ContentRefiner

template <typename T>
ContentRefiner<T>::ContentRefiner(const NetworkConfig& cfg)
    : attention(cfg.attention_dim, cfg.attention_heads, cfg.ffn_hidden),
      deconv(cfg.attention_dim, cfg.decoder_channels) {}

template <typename T>
void ContentRefiner<T>::init(std::mt19937_64& rng) {
  attention.init(rng);
  deconv.init(rng);
}

template <typename T>
Tensor<T> ContentRefiner<T>::forward(const Tensor<T>& f2, const Tensor<T>& f1, Mode mode, Cache* cache) const {
  Tensor<T> z = attention.forward(f2, f1, cache ? &cache->attention : nullptr);
  return deconv.forward(z, mode, cache ? &cache->deconv : nullptr);
}

template <typename T>
void ContentRefiner<T>::backward(const Cache& cache, const Tensor<T>& d_o1, Tensor<T>& d_f2, Tensor<T>& d_f1) {
  Tensor<T> dz = deconv.backward(cache.deconv, d_o1);
  attention.backward(cache.attention, dz, d_f2, d_f1);
}

template <typename T>
void ContentRefiner<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  attention.collect(prefix + ".attention", out);
  deconv.collect(prefix + ".deconv", out);
}

template <typename T>
void ContentRefiner<T>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<T>>& out) {
  deconv.collect_buffers(prefix + ".deconv", out);
}

// ----------------------------------------------------- ParameterEstimator

template <typename T>
ParameterEstimator<T>::ParameterEstimator(std::size_t in_channels, std::size_t width)
    : convs{Conv2d<T>(in_channels, width, 3, 1, 1), Conv2d<T>(width, width, 3, 1, 1),
            Conv2d<T>(width, width, 3, 1, 1), Conv2d<T>(2 * width, width, 3, 1, 1),
            Conv2d<T>(2 * width, 3, 3, 1, 1)} {}

template <typename T>
void ParameterEstimator<T>::init(std::mt19937_64& rng) {
  for (auto& c : convs) c.init(rng);
}

template <typename T>
Tensor<T> ParameterEstimator<T>::forward(const Tensor<T>& x, Cache* cache) const {
  if (x.rank() != 4 || x.c() != convs[0].in_channels) {
    throw ShapeError("estimate_parameters: expected N x " + std::to_string(convs[0].in_channels) +
                     " x H x W, got " + to_string(x.dims()));
  }
  Tensor<T> c1 = convs[0].forward(x);
  relu_inplace(c1);
  Tensor<T> c2 = convs[1].forward(c1);
  relu_inplace(c2);
  Tensor<T> c3 = convs[2].forward(c2);
  relu_inplace(c3);
  Tensor<T> cat32 = concat_channels(c3, c2);
  Tensor<T> c4 = convs[3].forward(cat32);
  relu_inplace(c4);
  Tensor<T> cat41 = concat_channels(c4, c1);
  Tensor<T> out = convs[4].forward(cat41);
  tanh_inplace(out);
  if (cache) {
    cache->input = x;
    cache->c1 = std::move(c1);
    cache->c2 = std::move(c2);
    cache->c3 = std::move(c3);
    cache->cat32 = std::move(cat32);
    cache->c4 = std::move(c4);
    cache->cat41 = std::move(cat41);
    cache->output = out;
  }
  return out;
}

template <typename T>
Tensor<T> ParameterEstimator<T>::backward(const Cache& cache, const Tensor<T>& d_map, bool input_grad) {
  Tensor<T> d = d_map;
  tanh_backward_inplace(cache.output, d);
  Tensor<T> d_cat41 = convs[4].backward(cache.cat41, d);
  Tensor<T> d_c4, d_c1;
  split_channels(d_cat41, cache.c4.c(), d_c4, d_c1);
  relu_backward_inplace(cache.c4, d_c4);
  Tensor<T> d_cat32 = convs[3].backward(cache.cat32, d_c4);
  Tensor<T> d_c3, d_c2;
  split_channels(d_cat32, cache.c3.c(), d_c3, d_c2);
  relu_backward_inplace(cache.c3, d_c3);
  d_c2 += convs[2].backward(cache.c2, d_c3);
  relu_backward_inplace(cache.c2, d_c2);
  d_c1 += convs[1].backward(cache.c1, d_c2);
  relu_backward_inplace(cache.c1, d_c1);
  return convs[0].backward(cache.input, d_c1, input_grad);
}

template <typename T>
void ParameterEstimator<T>::collect(const std::string& prefix, std::vector<NamedParameter<T>>& out) {
  for (std::size_t i = 0; i < 5; ++i) convs[i].collect(prefix + ".conv" + std::to_string(i + 1), out);
}

// ---------------------------------------------------------------- Network

namespace {
const NetworkConfig& checked(const NetworkConfig& cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

template <typename T>
Network<T>::Network(const NetworkConfig& cfg)
    : extractor(checked(cfg)),
      decomposition(cfg.attention_dim),
      refiner(cfg),
      light(cfg.attention_dim, cfg.decoder_channels),
      suppression(3, cfg.estimator_channels),
      enhancement(3, cfg.estimator_channels),
      config_(cfg) {
  std::mt19937_64 rng(cfg.seed);
  extractor.init(rng);
  decomposition.init(rng);
  refiner.init(rng);
  light.init(rng);
  suppression.init(rng);
  enhancement.init(rng);
}

template <typename T>
ForwardResult<T> Network<T>::forward(const Tensor<T>& images, Mode mode, Tape<T>* tape) const {
  ForwardResult<T> r;
  r.f0 = extractor.forward(images, mode, tape ? &tape->extractor : nullptr);
  std::tie(r.f1, r.f2) = decomposition.forward(r.f0);
  r.light = light.forward(r.f1, mode, tape ? &tape->light : nullptr);
  r.content = refiner.forward(r.f2, r.f1, mode, tape ? &tape->refiner : nullptr);
  r.suppression = suppression.forward(r.light, tape ? &tape->suppression : nullptr);
  r.enhancement = enhancement.forward(r.content, tape ? &tape->enhancement : nullptr);
  if (tape) tape->f0 = r.f0;
  return r;
}

template <typename T>
void Network<T>::backward(const Tape<T>& tape, const Tensor<T>& d_suppression, const Tensor<T>& d_enhancement,
                          const Tensor<T>& d_light) {
  Tensor<T> d_o2 = suppression.backward(tape.suppression, d_suppression, true);
  if (!d_light.empty()) d_o2 += d_light;
  Tensor<T> d_o1 = enhancement.backward(tape.enhancement, d_enhancement, true);
  Tensor<T> d_f2, d_f1;
  refiner.backward(tape.refiner, d_o1, d_f2, d_f1);
  d_f1 += light.backward(tape.light, d_o2);
  Tensor<T> d_f0 = decomposition.backward(tape.f0, d_f1, d_f2);
  extractor.backward(tape.extractor, d_f0, false);
}

template <typename T>
void Network<T>::update_running_stats(const Tape<T>& tape) {
  for (std::size_t i = 0; i < 4; ++i) {
    extractor.stages[i].bn.update_running_stats(tape.extractor.stages[i].bn);
    refiner.deconv.stages[i].bn.update_running_stats(tape.refiner.deconv.stages[i].bn);
    light.stages[i].bn.update_running_stats(tape.light.stages[i].bn);
  }
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : parameters()) p.param->zero_grad();
}

template <typename T>
std::vector<NamedParameter<T>> Network<T>::parameters() {
  std::vector<NamedParameter<T>> out;
  extractor.collect("extractor", out);
  decomposition.collect("refine.decompose", out);
  refiner.collect("refine", out);
  light.collect("light", out);
  suppression.collect("suppress", out);
  enhancement.collect("enhance", out);
  return out;
}

template <typename T>
std::vector<NamedBuffer<T>> Network<T>::buffers() {
  std::vector<NamedBuffer<T>> out;
  extractor.collect_buffers("extractor", out);
  refiner.collect_buffers("refine", out);
  light.collect_buffers("light", out);
  return out;
}

template struct FeatureExtractor<float>;
template struct FeatureExtractor<double>;
template struct Decomposition<float>;
template struct Decomposition<double>;
template struct DeconvStack<float>;
template struct DeconvStack<double>;
template struct ContentRefiner<float>;
template struct ContentRefiner<double>;
template struct ParameterEstimator<float>;
template struct ParameterEstimator<double>;
template class Network<float>;
template class Network<double>;

}  // namespace ldenhancer
