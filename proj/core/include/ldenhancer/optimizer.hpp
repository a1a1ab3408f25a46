#pragma once

#include <cstdint>
#include <vector>

#include "ldenhancer/tensor.hpp"
#include "ldenhancer/weight_archive.hpp"

namespace ldenhancer {

struct AdamWOptions {
  double learning_rate = 1e-6;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with decoupled weight decay:
//   p <- p - lr * wd * p
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<NamedParameter<T>> params, AdamWOptions options);

  void step();
  std::uint64_t steps() const { return step_; }
  const AdamWOptions& options() const { return options_; }

  // Moments under "m/<name>" and "v/<name>", step count under "step".
  WeightArchive state() const;
  void load_state(const WeightArchive& archive);

 private:
  std::vector<NamedParameter<T>> params_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  AdamWOptions options_;
  std::uint64_t step_ = 0;
};

}  // namespace ldenhancer
