#include "ldenhancer/tracking_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "ldenhancer/error.hpp"

namespace ldenhancer {

namespace {

Curve grid(double step, std::size_t count) {
  Curve c;
  for (std::size_t i = 0; i < count; ++i) c.thresholds.push_back(static_cast<double>(i) * step);
  c.values.assign(count, 0.0);
  return c;
}

Curve precision_grid() { return grid(1.0, 51); }
Curve norm_precision_grid() { return grid(0.01, 51); }
Curve success_grid() { return grid(0.05, 21); }

struct SequenceScore {
  std::size_t frames = 0;
  double precision = 0, norm_precision = 0;
  Curve precision_curve = precision_grid();
  Curve norm_precision_curve = norm_precision_grid();
  Curve success_curve = success_grid();
};

SequenceScore score_sequence(const TrackRecord& r, const OpeOptions& opt) {
  if (r.pred.size() != r.gt.size()) {
    throw ValueError("sequence " + r.id + ": " + std::to_string(r.pred.size()) + " predictions vs " +
                     std::to_string(r.gt.size()) + " ground-truth boxes");
  }
  SequenceScore s;
  for (std::size_t f = 0; f < r.gt.size(); ++f) {
    const Box& g = r.gt[f];
    if (g.absent() || !(g.w > 0 && g.h > 0)) continue;
    const Box& p = r.pred[f];
    ++s.frames;
    const double e = cle(p, g), ne = normalized_center_error(p, g), o = iou(p, g);
    if (e < opt.precision_threshold) s.precision += 1;
    if (ne < opt.norm_precision_threshold) s.norm_precision += 1;
    for (std::size_t i = 0; i < s.precision_curve.values.size(); ++i)
      if (e < s.precision_curve.thresholds[i]) s.precision_curve.values[i] += 1;
    for (std::size_t i = 0; i < s.norm_precision_curve.values.size(); ++i)
      if (ne < s.norm_precision_curve.thresholds[i]) s.norm_precision_curve.values[i] += 1;
    for (std::size_t i = 0; i < s.success_curve.values.size(); ++i)
      if (o > s.success_curve.thresholds[i]) s.success_curve.values[i] += 1;
  }
  if (s.frames > 0) {
    const double inv = 1.0 / static_cast<double>(s.frames);
    s.precision *= inv;
    s.norm_precision *= inv;
    for (auto* c : {&s.precision_curve, &s.norm_precision_curve, &s.success_curve})
      for (double& v : c->values) v *= inv;
  }
  return s;
}

MetricReport aggregate(const std::vector<const TrackRecord*>& records, const OpeOptions& opt) {
  MetricReport rep;
  rep.precision_curve = precision_grid();
  rep.norm_precision_curve = norm_precision_grid();
  rep.success_curve = success_grid();
  for (const TrackRecord* r : records) {
    const SequenceScore s = score_sequence(*r, opt);
    if (s.frames == 0) continue;
    ++rep.sequences;
    rep.frames += s.frames;
    rep.precision += s.precision;
    rep.norm_precision += s.norm_precision;
    for (std::size_t i = 0; i < s.precision_curve.values.size(); ++i)
      rep.precision_curve.values[i] += s.precision_curve.values[i];
    for (std::size_t i = 0; i < s.norm_precision_curve.values.size(); ++i)
      rep.norm_precision_curve.values[i] += s.norm_precision_curve.values[i];
    for (std::size_t i = 0; i < s.success_curve.values.size(); ++i)
      rep.success_curve.values[i] += s.success_curve.values[i];
  }
  if (rep.sequences == 0) throw ValueError("ope_metrics: no frame with valid ground truth");
  const double inv = 1.0 / static_cast<double>(rep.sequences);
  rep.precision *= inv;
  rep.norm_precision *= inv;
  for (auto* c : {&rep.precision_curve, &rep.norm_precision_curve, &rep.success_curve})
    for (double& v : c->values) v *= inv;
  rep.success_auc = curve_auc(rep.success_curve);
  rep.norm_precision_auc = curve_auc(rep.norm_precision_curve);
  return rep;
}

nlohmann::json curve_json(const Curve& c) { return {{"thresholds", c.thresholds}, {"values", c.values}}; }

Curve curve_from(const nlohmann::json& j) {
  return {j.at("thresholds").get<std::vector<double>>(), j.at("values").get<std::vector<double>>()};
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["sequences"] = r.sequences;
  j["frames"] = r.frames;
  j["precision"] = r.precision;
  j["norm_precision"] = r.norm_precision;
  j["norm_precision_auc"] = r.norm_precision_auc;
  j["success_auc"] = r.success_auc;
  j["precision_curve"] = curve_json(r.precision_curve);
  j["norm_precision_curve"] = curve_json(r.norm_precision_curve);
  j["success_curve"] = curve_json(r.success_curve);
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [tag, sub] : r.by_attribute) attrs[tag] = to_json(sub);
  j["by_attribute"] = attrs;
  return j;
}

MetricReport from_json(const nlohmann::json& j) {
  MetricReport r;
  r.sequences = j.at("sequences").get<std::size_t>();
  r.frames = j.at("frames").get<std::size_t>();
  r.precision = j.at("precision").get<double>();
  r.norm_precision = j.at("norm_precision").get<double>();
  r.norm_precision_auc = j.at("norm_precision_auc").get<double>();
  r.success_auc = j.at("success_auc").get<double>();
  r.precision_curve = curve_from(j.at("precision_curve"));
  r.norm_precision_curve = curve_from(j.at("norm_precision_curve"));
  r.success_curve = curve_from(j.at("success_curve"));
  if (j.contains("by_attribute"))
    for (const auto& [tag, sub] : j.at("by_attribute").items()) r.by_attribute[tag] = from_json(sub);
  return r;
}

}  // namespace

double cle(const Box& p, const Box& g) { return std::hypot(p.cx() - g.cx(), p.cy() - g.cy()); }

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  // Areas from corners, like the intersection, so iou(a, a) is exactly 1.
  const double area_a = ((a.x + a.w) - a.x) * ((a.y + a.h) - a.y);
  const double area_b = ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
  const double uni = area_a + area_b - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double normalized_center_error(const Box& p, const Box& g) {
  return std::hypot((p.cx() - g.cx()) / g.w, (p.cy() - g.cy()) / g.h);
}

double curve_auc(const Curve& c) {
  if (c.values.size() < 2) return c.values.empty() ? 0.0 : c.values[0];
  double area = 0;
  for (std::size_t i = 1; i < c.values.size(); ++i)
    area += 0.5 * (c.values[i] + c.values[i - 1]) * (c.thresholds[i] - c.thresholds[i - 1]);
  return area / (c.thresholds.back() - c.thresholds.front());
}

MetricReport ope_metrics(const std::vector<TrackRecord>& records, const OpeOptions& opt) {
  if (records.empty()) throw ValueError("ope_metrics: no records");
  std::vector<const TrackRecord*> all;
  std::set<std::string> tags;
  for (const auto& r : records) {
    all.push_back(&r);
    tags.insert(r.attributes.begin(), r.attributes.end());
  }
  MetricReport rep = aggregate(all, opt);
  for (const auto& tag : tags) {
    std::vector<const TrackRecord*> subset;
    for (const auto& r : records)
      if (std::find(r.attributes.begin(), r.attributes.end(), tag) != r.attributes.end()) subset.push_back(&r);
    try {
      rep.by_attribute[tag] = aggregate(subset, opt);
    } catch (const ValueError&) {
      // Every sequence with this tag lacks ground truth.
    }
  }
  return rep;
}

double improvement_delta(double base, double enhanced) {
  if (!(base > 0)) throw ValueError("improvement_delta: base score must be positive");
  return 100.0 * (enhanced - base) / base;
}

std::string format_delta(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", delta);
  return buf;
}

std::vector<Box> read_boxes(const std::filesystem::path& path, bool one_based) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read box file " + path.string());
  std::vector<Box> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::replace_if(line.begin(), line.end(), [](char ch) { return ch == ',' || ch == '\t' || ch == '\r'; }, ' ');
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream ls(line);
    Box b;
    if (!(ls >> b.x >> b.y >> b.w >> b.h)) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected x,y,w,h");
    }
    if (one_based && !b.absent()) {
      b.x -= 1;
      b.y -= 1;
    }
    out.push_back(b);
  }
  return out;
}

std::vector<TrackRecord> load_records(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                      const std::filesystem::path& attributes, bool one_based) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(gt_dir)) throw IoError("not a directory: " + gt_dir.string());
  if (!fs::is_directory(pred_dir)) throw IoError("not a directory: " + pred_dir.string());
  nlohmann::json tags = nlohmann::json::object();
  if (!attributes.empty()) {
    std::ifstream is(attributes);
    if (!is) throw IoError("cannot read attributes file " + attributes.string());
    tags = nlohmann::json::parse(is);
  }
  std::vector<fs::path> gts;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") gts.push_back(e.path());
  std::sort(gts.begin(), gts.end());
  std::vector<TrackRecord> records;
  for (const auto& g : gts) {
    TrackRecord r;
    r.id = g.stem().string();
    const fs::path p = pred_dir / g.filename();
    if (!fs::exists(p)) throw IoError("sequence " + r.id + ": missing prediction file " + p.string());
    r.gt = read_boxes(g, one_based);
    r.pred = read_boxes(p, one_based);
    if (tags.contains(r.id)) r.attributes = tags.at(r.id).get<std::vector<std::string>>();
    records.push_back(std::move(r));
  }
  if (records.empty()) throw IoError("no ground-truth files in " + gt_dir.string());
  return records;
}

std::string report_to_json(const MetricReport& report) { return to_json(report).dump(2); }

MetricReport report_from_json(const std::string& text) {
  try {
    return from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed metric report: ") + e.what());
  }
}

}  // namespace ldenhancer
