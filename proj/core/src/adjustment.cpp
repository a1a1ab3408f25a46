#include "ldenhancer/adjustment.hpp"

namespace ldenhancer {

template <typename T>
AdjustmentTrace<T> interweave_adjust(const Tensor<T>& image, const Tensor<T>& suppression,
                                     const Tensor<T>& enhancement, std::size_t iterations) {
  if (image.dims() != suppression.dims() || image.dims() != enhancement.dims()) {
    throw ShapeError("interweave_adjust: image " + to_string(image.dims()) + ", P_S " +
                     to_string(suppression.dims()) + ", P_E " + to_string(enhancement.dims()));
  }
  if (iterations < 1) throw ValueError("interweave_adjust: iteration count must be at least 1");

  AdjustmentTrace<T> trace;
  trace.suppression = suppression;
  trace.enhancement = enhancement;
  trace.iterations = iterations;
  trace.frames.reserve(iterations + 1);
  trace.frames.push_back(image);
  for (std::size_t n = 1; n <= iterations; ++n) {
    const Tensor<T>& prev = trace.frames.back();
    Tensor<T> next(prev.dims());
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const T x = prev[i];
      const T u = x + (enhancement[i] - suppression[i]) * x * (T(1) - x);
      if (u < T(0)) {
        next[i] = T(0);
        ++trace.clamp_events;
      } else if (u > T(1)) {
        next[i] = T(1);
        ++trace.clamp_events;
      } else {
        next[i] = u;
      }
    }
    trace.frames.push_back(std::move(next));
  }
  return trace;
}

template <typename T>
AdjustmentGrads<T> interweave_adjust_backward(const AdjustmentTrace<T>& trace, const Tensor<T>& d_result) {
  Tensor<T>::require_same_shape(trace.result(), d_result, "interweave_adjust_backward");
  AdjustmentGrads<T> g;
  Tensor<T> d = d_result;
  Tensor<T> d_diff(d.dims());
  for (std::size_t n = trace.iterations; n >= 1; --n) {
    const Tensor<T>& prev = trace.frames[n - 1];
    for (std::size_t i = 0; i < d.size(); ++i) {
      const T x = prev[i];
      const T diff = trace.enhancement[i] - trace.suppression[i];
      const T u = x + diff * x * (T(1) - x);
      const T pass = (u < T(0) || u > T(1)) ? T(0) : d[i];
      d_diff[i] += pass * x * (T(1) - x);
      d[i] = pass * (T(1) + diff * (T(1) - T(2) * x));
    }
  }
  g.image = std::move(d);
  g.enhancement = d_diff;
  g.suppression = Tensor<T>(d_diff.dims());
  for (std::size_t i = 0; i < d_diff.size(); ++i) g.suppression[i] = -d_diff[i];
  return g;
}

template AdjustmentTrace<float> interweave_adjust<float>(const Tensor<float>&, const Tensor<float>&,
                                                         const Tensor<float>&, std::size_t);
template AdjustmentTrace<double> interweave_adjust<double>(const Tensor<double>&, const Tensor<double>&,
                                                           const Tensor<double>&, std::size_t);
template AdjustmentGrads<float> interweave_adjust_backward<float>(const AdjustmentTrace<float>&, const Tensor<float>&);
template AdjustmentGrads<double> interweave_adjust_backward<double>(const AdjustmentTrace<double>&,
                                                                    const Tensor<double>&);

}  // namespace ldenhancer
