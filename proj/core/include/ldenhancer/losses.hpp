#pragma once

#include "ldenhancer/config.hpp"
#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Every loss takes N x C x H x W tensors, averages over the batch, and writes
// dL/dinput into `grad` when it is non-null.

inline double smooth_l1(double d, double beta) {
  const double a = d < 0 ? -d : d;
  return a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
}

inline double smooth_l1_derivative(double d, double beta) {
  const double a = d < 0 ? -d : d;
  if (a < beta) return d / beta;
  return d > 0 ? 1.0 : -1.0;
}

// Spatial consistency: gray 4x4 region means Y (enhanced) and O (reference);
// for every region and each in-bounds 4-neighbour j accumulates
// (|Y_i - Y_j| - |O_i - O_j|)^2, then averages over regions.
template <typename T>
double loss_spa(const Tensor<T>& enhanced, const Tensor<T>& reference, Tensor<T>* grad = nullptr);

// Color constancy: sum over channel pairs of squared mean differences.
template <typename T>
double loss_col(const Tensor<T>& enhanced, Tensor<T>* grad = nullptr);

// Illumination smoothness of the adjustment map P_E - P_S:
// sum over pixels of (|dx| + |dy|)^2 with forward differences, averaged over
// channels and maps.
template <typename T>
double loss_tv(const Tensor<T>& map, Tensor<T>* grad = nullptr);

// Exposure control: mean over region_size x region_size tiles of
// SmoothL1(alpha * E_i - K).
template <typename T>
double loss_ie(const Tensor<T>& enhanced, double exposure_level, double alpha, double beta,
               std::size_t region_size = 16, Tensor<T>* grad = nullptr);

// Light distribution loss: mean SmoothL1(O2 - I_l).
template <typename T>
double loss_light(const Tensor<T>& light, const Tensor<T>& label, double beta, Tensor<T>* grad = nullptr);

struct LossParts {
  double spa = 0;
  double col = 0;
  double tv = 0;
  double ie = 0;
  double light = 0;
};

struct LossReport {
  double spa = 0;
  double col = 0;
  double tv = 0;
  double ie = 0;
  double light = 0;
  double total = 0;
};

LossReport loss_total(const LossParts& parts, const LossWeights& weights);

}  // namespace ldenhancer
