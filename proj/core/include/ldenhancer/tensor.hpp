#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ldenhancer/error.hpp"

namespace ldenhancer {

using Dims = std::vector<std::size_t>;

inline std::string to_string(const Dims& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ')';
  return os.str();
}

inline std::size_t element_count(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major array. Activations use NCHW; images are N x 3 x H x W with
// values in [0, 1].
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Dims dims, T fill = T(0))
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {}
  Tensor(Dims dims, std::vector<T> values) : dims_(std::move(dims)), data_(std::move(values)) {
    if (data_.size() != element_count(dims_)) {
      throw ShapeError("tensor: " + std::to_string(data_.size()) + " values for shape " +
                       ldenhancer::to_string(dims_));
    }
  }

  static Tensor nchw(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0)) {
    return Tensor(Dims{n, c, h, w}, fill);
  }

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // NCHW accessors; valid only for rank-4 tensors.
  std::size_t n() const { return dims_[0]; }
  std::size_t c() const { return dims_[1]; }
  std::size_t h() const { return dims_[2]; }
  std::size_t w() const { return dims_[3]; }
  std::size_t plane_size() const { return dims_[2] * dims_[3]; }
  std::size_t sample_size() const { return dims_[1] * dims_[2] * dims_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T* sample(std::size_t b) { return data_.data() + b * sample_size(); }
  const T* sample(std::size_t b) const { return data_.data() + b * sample_size(); }
  T* plane(std::size_t b, std::size_t ch) { return sample(b) + ch * plane_size(); }
  const T* plane(std::size_t b, std::size_t ch) const { return sample(b) + ch * plane_size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) {
    return data_[((b * dims_[1] + ch) * dims_[2] + y) * dims_[3] + x];
  }
  const T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[((b * dims_[1] + ch) * dims_[2] + y) * dims_[3] + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void reshape(Dims dims) {
    if (element_count(dims) != data_.size()) {
      throw ShapeError("reshape " + ldenhancer::to_string(dims_) + " -> " +
                       ldenhancer::to_string(dims));
    }
    dims_ = std::move(dims);
  }

  // Copy of samples [first, first + count) along the batch axis.
  Tensor slice_batch(std::size_t first, std::size_t count) const {
    Dims d = dims_;
    d[0] = count;
    Tensor out(d);
    std::copy_n(sample(first), count * sample_size(), out.data());
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(*this, o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same_shape(*this, o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

  static void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.dims_ != b.dims_) {
      throw ShapeError(std::string(what) + ": shape " + ldenhancer::to_string(a.dims_) +
                       " vs " + ldenhancer::to_string(b.dims_));
    }
  }

 private:
  Dims dims_;
  std::vector<T> data_;
};

template <typename T>
T max_abs_difference(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T>::require_same_shape(a, b, "max_abs_difference");
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Trainable tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  explicit Parameter(Dims dims) : value(dims), grad(dims) {}
  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

}  // namespace ldenhancer
