#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ldenhancer {

// Axis-aligned box, (x, y) top-left corner.
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  double area() const { return w * h; }
  bool absent() const { return x == 0 && y == 0 && w == 0 && h == 0; }
};

// Center location error in pixels.
double cle(const Box& pred, const Box& gt);
// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);
// Center error scaled by the ground-truth width and height.
double normalized_center_error(const Box& pred, const Box& gt);

struct TrackRecord {
  std::string id;
  std::vector<Box> pred;
  std::vector<Box> gt;
  std::vector<std::string> attributes;
};

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

struct MetricReport {
  std::size_t sequences = 0;
  std::size_t frames = 0;        // scored frames, absent ground truth excluded
  double precision = 0;          // fraction with CLE < precision threshold
  double norm_precision = 0;     // fraction with normalized error < norm threshold
  double norm_precision_auc = 0;
  double success_auc = 0;
  Curve precision_curve;         // CLE < t, t = 0..50 px
  Curve norm_precision_curve;    // normalized error < t, t = 0..0.5 step 0.01
  Curve success_curve;           // IoU > t, t = 0..1 step 0.05
  std::map<std::string, MetricReport> by_attribute;
};

struct OpeOptions {
  double precision_threshold = 20.0;
  double norm_precision_threshold = 0.2;
};

// Scores every sequence on its own and averages the per-sequence curves with
// equal weight. Frames whose ground truth is absent (all zero) or has zero
// area are skipped. Throws ValueError on empty input or when a record's
// prediction and ground-truth lengths differ (the message names the record).
MetricReport ope_metrics(const std::vector<TrackRecord>& records, const OpeOptions& options = {});

// Trapezoidal area under a curve, normalized by the threshold span.
double curve_auc(const Curve& curve);

// 100 * (enhanced - base) / base; base must be positive.
double improvement_delta(double base, double enhanced);
std::string format_delta(double delta);

// One box per line, "x,y,w,h" (commas, tabs or spaces). With one_based the
// top-left corner is shifted by -1.
std::vector<Box> read_boxes(const std::filesystem::path& path, bool one_based = false);

// Pairs <pred_dir>/<id>.txt with <gt_dir>/<id>.txt for every ground-truth
// file. Attributes come from an optional JSON object {"id": ["tag", ...]}.
std::vector<TrackRecord> load_records(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                      const std::filesystem::path& attributes = {}, bool one_based = false);

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);

}  // namespace ldenhancer
