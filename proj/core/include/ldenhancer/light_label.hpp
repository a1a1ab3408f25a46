#pragma once

#include <cstddef>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

inline constexpr double kDefaultLabelLambda = 10.0;

// Smooth light distribution I_l and content residual I_o = I - I_l.
template <typename T>
struct LightLabelPair {
  Tensor<T> light;    // clipped to [0, 1]
  Tensor<T> content;  // I minus the unclipped solution
  double lambda_smooth = kDefaultLabelLambda;
  std::size_t clip_events = 0;
};

// Per channel, solves
//   min_L ||L - I||^2 + lambda * (||D_yy L||^2 + ||D_xx L||^2 + 2 ||D_xy L||^2)
// with second differences taken at interior samples only, so affine signals
// lie in the null space and pass unchanged. Solved by conjugate gradients
// preconditioned with the separable spectral filter of the axis terms.
template <typename T>
LightLabelPair<T> light_label(const Tensor<T>& image, double lambda_smooth = kDefaultLabelLambda);

// The penalty above, summed over all samples and channels.
template <typename T>
double curvature_energy(const Tensor<T>& image);

}  // namespace ldenhancer
