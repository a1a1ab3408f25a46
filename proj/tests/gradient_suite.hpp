#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "support.hpp"

namespace lde_test {

struct BlockCheck {
  std::string block;
  GradCheck result;
};

// Analytic-vs-numeric gradient checks in double precision for every network
// block, the adjustment recurrence and every loss. Each check samples
// `samples` coordinates across the block's inputs and parameters.
std::vector<BlockCheck> run_gradient_suite(std::uint64_t seed, std::size_t samples = 100);

}  // namespace lde_test
