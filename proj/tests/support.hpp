#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ldenhancer/tensor.hpp"

namespace lde_test {

using ldenhancer::Tensor;

template <typename T = double>
Tensor<T> random_tensor(ldenhancer::Dims dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<T>(u(rng));
  return t;
}

// A value tensor paired with the analytic gradient of the objective w.r.t. it.
struct Slot {
  std::string name;
  Tensor<double>* value;
  const Tensor<double>* grad;
};

struct GradCheck {
  double max_rel_error = 0;
  std::string worst;
  std::size_t samples = 0;
};

// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares analytic gradients against central differences of
// `objective` at `samples` coordinates drawn uniformly over all slots.
// Coordinates whose gradient is far below the slots' RMS gradient are
// compared against 1e-3 of that RMS instead of their own magnitude, since
// structurally zero gradients (a bias feeding batch norm) carry only rounding
// noise.
inline GradCheck check_gradients(const std::vector<Slot>& slots, const std::function<double()>& objective,
                                 std::size_t samples, std::mt19937_64& rng, double step = 1e-6) {
  std::size_t total = 0;
  double sq = 0;
  for (const auto& s : slots) {
    total += s.value->size();
    for (double g : s.grad->values()) sq += g * g;
  }
  const double floor = std::max(1e-3 * std::sqrt(sq / static_cast<double>(total)), 1e-12);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  GradCheck r;
  for (std::size_t k = 0; k < samples; ++k) {
    std::size_t idx = pick(rng);
    const Slot* slot = nullptr;
    for (const auto& s : slots) {
      if (idx < s.value->size()) {
        slot = &s;
        break;
      }
      idx -= s.value->size();
    }
    double& x = (*slot->value)[idx];
    const double saved = x;
    auto at = [&](double offset) {
      x = saved + offset;
      return objective();
    };
    const double numeric = (at(step) - at(-step)) / (2 * step);
    x = saved;
    const double err = relative_error((*slot->grad)[idx], numeric, floor);
    ++r.samples;
    if (err > r.max_rel_error) {
      r.max_rel_error = err;
      char buf[160];
      std::snprintf(buf, sizeof buf, "[%zu] analytic %.10g numeric %.10g", idx, (*slot->grad)[idx], numeric);
      r.worst = slot->name + buf;
    }
  }
  return r;
}

// Random-weighted sum of a tensor, the usual scalar probe for backprop.
inline double weighted_sum(const Tensor<double>& t, const Tensor<double>& weights) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * weights[i];
  return s;
}

}  // namespace lde_test
