#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ldenhancer/network.hpp"

namespace lde_test {

using StageShapes = std::vector<std::pair<std::string, ldenhancer::Dims>>;

// The 16 stage outputs observed on one forward pass.
template <typename T>
StageShapes observed_stage_shapes(const ldenhancer::Network<T>& net, const ldenhancer::Tensor<T>& image) {
  ldenhancer::Tape<T> tape;
  const auto r = net.forward(image, ldenhancer::Mode::kEval, &tape);
  StageShapes s;
  for (int i = 0; i < 4; ++i) s.emplace_back("C" + std::to_string(i + 1), tape.extractor.stages[i].output.dims());
  s.emplace_back("F1", r.f1.dims());
  s.emplace_back("F2", r.f2.dims());
  for (int i = 0; i < 3; ++i) s.emplace_back("D" + std::to_string(i + 1), tape.light.stages[i].output.dims());
  s.emplace_back("O2", r.light.dims());
  s.emplace_back("O1", r.content.dims());
  s.emplace_back("Conv1", tape.suppression.c1.dims());
  s.emplace_back("Conv3&Conv2", tape.suppression.cat32.dims());
  s.emplace_back("Conv4&Conv1", tape.suppression.cat41.dims());
  s.emplace_back("P_S", r.suppression.dims());
  s.emplace_back("P_E", r.enhancement.dims());
  return s;
}

// Expected shapes for a 256 x 256 RGB input under the default config.
inline StageShapes expected_stage_shapes_256() {
  return {{"C1", {1, 4, 128, 128}},   {"C2", {1, 4, 64, 64}},          {"C3", {1, 8, 32, 32}},
          {"C4", {1, 8, 16, 16}},     {"F1", {1, 8, 16, 16}},          {"F2", {1, 8, 16, 16}},
          {"D1", {1, 8, 32, 32}},     {"D2", {1, 4, 64, 64}},          {"D3", {1, 4, 128, 128}},
          {"O2", {1, 3, 256, 256}},   {"O1", {1, 3, 256, 256}},        {"Conv1", {1, 16, 256, 256}},
          {"Conv3&Conv2", {1, 32, 256, 256}}, {"Conv4&Conv1", {1, 32, 256, 256}},
          {"P_S", {1, 3, 256, 256}},  {"P_E", {1, 3, 256, 256}}};
}

}  // namespace lde_test
