#pragma once

#include <cstddef>
#include <vector>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Frames I_0..I_N of the interweave iteration
//   I_n = clamp(I_{n-1} + (P_E - P_S) * I_{n-1} * (1 - I_{n-1}), 0, 1).
template <typename T>
struct AdjustmentTrace {
  std::vector<Tensor<T>> frames;
  Tensor<T> suppression;
  Tensor<T> enhancement;
  std::size_t iterations = 0;
  std::size_t clamp_events = 0;  // elementwise clamps summed over all steps

  const Tensor<T>& result() const { return frames.back(); }
};

// The same (P_E - P_S) map is applied at every step.
template <typename T>
AdjustmentTrace<T> interweave_adjust(const Tensor<T>& image, const Tensor<T>& suppression,
                                     const Tensor<T>& enhancement, std::size_t iterations);

template <typename T>
struct AdjustmentGrads {
  Tensor<T> image;
  Tensor<T> suppression;
  Tensor<T> enhancement;
};

// Reverse pass through the trace given dL/dI_N. Clamped entries pass no
// gradient.
template <typename T>
AdjustmentGrads<T> interweave_adjust_backward(const AdjustmentTrace<T>& trace, const Tensor<T>& d_result);

}  // namespace ldenhancer
