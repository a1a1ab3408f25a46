#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Dark textured scene with a few bright light sources and one quadrant lit
// more strongly than the rest: an unevenly lit frame in [0, 1].
Tensor<float> synthetic_uneven_frame(std::size_t size, std::uint64_t seed);

// Top-left quadrant around `dark`, bottom-right around `bright`, the other two
// halfway between, each with mild texture. Quadrant means are exact.
Tensor<float> quadrant_probe_frame(std::size_t size, double dark, double bright, std::uint64_t seed);

// Writes `count` frames as <root>/seqNNN/000000.png, one sequence per frame.
void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count, std::size_t size,
                             std::uint64_t seed);

}  // namespace ldenhancer
