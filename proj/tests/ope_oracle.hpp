#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ldenhancer/tracking_eval.hpp"

namespace lde_test {

using ldenhancer::Box;
using ldenhancer::TrackRecord;

inline double oracle_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy, uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? std::min(1.0, inter / uni) : 0.0;
}

inline double oracle_cle(const Box& a, const Box& b) {
  return std::hypot((a.x + 0.5 * a.w) - (b.x + 0.5 * b.w), (a.y + 0.5 * a.h) - (b.y + 0.5 * b.h));
}

// Per-sequence fraction of frames with IoU > t, averaged over sequences, then
// integrated over n evenly spaced thresholds in [0, 1] by the trapezoid rule.
inline double sweep_success_auc(const std::vector<TrackRecord>& records, std::size_t n) {
  std::vector<double> curve(n, 0.0);
  for (const auto& r : records) {
    std::vector<double> ious;
    for (std::size_t f = 0; f < r.gt.size(); ++f)
      if (r.gt[f].w * r.gt[f].h > 0) ious.push_back(oracle_iou(r.pred[f], r.gt[f]));
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n - 1);
      const auto hits = std::count_if(ious.begin(), ious.end(), [&](double v) { return v > t; });
      curve[k] += static_cast<double>(hits) / static_cast<double>(ious.size()) / static_cast<double>(records.size());
    }
  }
  double area = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) area += 0.5 * (curve[k] + curve[k + 1]) / static_cast<double>(n - 1);
  return area;
}

// Tracks that drift around the ground truth with occasional failures.
inline std::vector<TrackRecord> random_records(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TrackRecord> out;
  for (std::size_t s = 0; s < count; ++s) {
    TrackRecord r;
    r.id = "rand" + std::to_string(s);
    const std::size_t frames = 20 + static_cast<std::size_t>(u(rng) * 180);
    const double spread = 2.0 + 40.0 * u(rng);
    Box gt{100 + 200 * u(rng), 100 + 200 * u(rng), 10 + 60 * u(rng), 10 + 60 * u(rng)};
    for (std::size_t f = 0; f < frames; ++f) {
      gt.x += 4 * (u(rng) - 0.5);
      gt.y += 4 * (u(rng) - 0.5);
      Box p{gt.x + spread * (u(rng) - 0.5), gt.y + spread * (u(rng) - 0.5), gt.w * (0.7 + 0.6 * u(rng)),
            gt.h * (0.7 + 0.6 * u(rng))};
      if (u(rng) < 0.05) p.x += 300;
      if (f == 0) p = gt;
      r.gt.push_back(gt);
      r.pred.push_back(p);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lde_test
