#include "ldenhancer/optimizer.hpp"

#include <cmath>

namespace ldenhancer {

template <typename T>
AdamW<T>::AdamW(std::vector<NamedParameter<T>> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.param->value.dims());
    v_.emplace_back(p.param->value.dims());
  }
}

template <typename T>
void AdamW<T>::step() {
  ++step_;
  const double lr = options_.learning_rate;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const T decay = static_cast<T>(1.0 - lr * options_.weight_decay);
  const T step_size = static_cast<T>(lr / bias1);
  const T sqrt_bias2 = static_cast<T>(std::sqrt(bias2));
  const T eps = static_cast<T>(options_.eps);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor<T>& p = params_[k].param->value;
    const Tensor<T>& g = params_[k].param->grad;
    Tensor<T>& m = m_[k];
    Tensor<T>& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= decay;
      m[i] = tb1 * m[i] + (T(1) - tb1) * g[i];
      v[i] = tb2 * v[i] + (T(1) - tb2) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) / sqrt_bias2 + eps);
    }
  }
}

template <typename T>
WeightArchive AdamW<T>::state() const {
  WeightArchive a;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    a.add("m/" + params_[k].name, m_[k]);
    a.add("v/" + params_[k].name, v_[k]);
  }
  // Split into two exactly representable halves.
  a.add("step", Dims{2}, {static_cast<float>(step_ >> 20), static_cast<float>(step_ & 0xFFFFF)});
  return a;
}

template <typename T>
void AdamW<T>::load_state(const WeightArchive& archive) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor<T> m = archive.tensor<T>("m/" + params_[k].name);
    Tensor<T> v = archive.tensor<T>("v/" + params_[k].name);
    if (m.dims() != m_[k].dims() || v.dims() != v_[k].dims()) {
      throw ShapeError("optimizer state shape mismatch for " + params_[k].name);
    }
    m_[k] = std::move(m);
    v_[k] = std::move(v);
  }
  const ArchiveEntry& s = archive.at("step");
  if (s.values.size() != 2) throw IoError("optimizer state: malformed step entry");
  step_ = (static_cast<std::uint64_t>(s.values[0]) << 20) | static_cast<std::uint64_t>(s.values[1]);
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace ldenhancer
