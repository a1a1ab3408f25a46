#pragma once

#include <cstddef>

#include "ldenhancer/adjustment.hpp"
#include "ldenhancer/network.hpp"
#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

struct Enhancement {
  AdjustmentTrace<float> trace;  // frames at the input resolution
  Tensor<float> light;           // O2 at the network resolution
};

// Runs the network in eval mode on the image resized to the configured input
// size, upsamples P_S and P_E bilinearly to the image size when they differ,
// and applies `iterations` adjustment steps (0 means the configured count).
Enhancement enhance(const Network<float>& net, const Tensor<float>& image, std::size_t iterations = 0);

}  // namespace ldenhancer
