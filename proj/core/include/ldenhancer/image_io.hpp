#pragma once

#include <cstddef>
#include <filesystem>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Reads an 8-bit image as a 1 x 3 x H x W RGB tensor in [0, 1]. Gray and
// alpha inputs are converted to three channels. When size > 0 the image is
// bilinearly resized to size x size after normalization.
Tensor<float> load_image(const std::filesystem::path& path, std::size_t size = 0);

// Bilinear resize of every sample and channel (pixel-center aligned).
Tensor<float> resize_bilinear(const Tensor<float>& images, std::size_t height, std::size_t width);

// Writes sample `index` of an N x 3 x H x W tensor as an 8-bit image; values
// are clamped to [0, 1] and rounded.
void save_image(const Tensor<float>& images, const std::filesystem::path& path, std::size_t index = 0);

bool is_image_file(const std::filesystem::path& path);

}  // namespace ldenhancer
