#include "ldenhancer/plots.hpp"

#include <cstdio>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "ldenhancer/error.hpp"

namespace ldenhancer {

namespace fs = std::filesystem;

namespace {

const cv::Scalar kPalette[] = {{200, 60, 30}, {30, 30, 220}, {40, 160, 40}, {160, 40, 160}, {0, 140, 230}, {90, 90, 90}};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::vector<LabeledCurve>& curves, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "threshold";
  for (const auto& [label, c] : curves) os << ',' << label;
  os << '\n';
  const Curve& ref = curves.front().second;
  for (std::size_t i = 0; i < ref.thresholds.size(); ++i) {
    os << fmt(ref.thresholds[i]);
    for (const auto& lc : curves) os << ',' << fmt(lc.second.values.at(i));
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

void render_curves(const std::vector<LabeledCurve>& curves, const std::string& title, const std::string& x_label,
                   const fs::path& png) {
  constexpr int W = 640, H = 480, left = 70, right = 20, top = 40, bottom = 60;
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  const double x0 = curves.front().second.thresholds.front(), x1 = curves.front().second.thresholds.back();
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * (W - left - right))); };
  auto py = [&](double y) { return H - bottom - static_cast<int>(std::lround(y * (H - top - bottom))); };

  const int font = cv::FONT_HERSHEY_SIMPLEX;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    cv::line(img, {px(x0), py(t)}, {px(x1), py(t)}, cv::Scalar(230, 230, 230));
    cv::line(img, {px(x0 + t * (x1 - x0)), py(0)}, {px(x0 + t * (x1 - x0)), py(1)}, cv::Scalar(230, 230, 230));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", t);
    cv::putText(img, buf, {8, py(t) + 4}, font, 0.4, cv::Scalar(0, 0, 0));
    std::snprintf(buf, sizeof buf, "%.3g", x0 + t * (x1 - x0));
    cv::putText(img, buf, {px(x0 + t * (x1 - x0)) - 10, H - bottom + 18}, font, 0.4, cv::Scalar(0, 0, 0));
  }
  cv::rectangle(img, {px(x0), py(1)}, {px(x1), py(0)}, cv::Scalar(0, 0, 0));
  cv::putText(img, title, {left, 25}, font, 0.6, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  cv::putText(img, x_label, {W / 2 - 40, H - 15}, font, 0.5, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k].second;
    std::vector<cv::Point> pts;
    for (std::size_t i = 0; i < c.values.size(); ++i) pts.emplace_back(px(c.thresholds[i]), py(c.values[i]));
    const cv::Scalar color = kPalette[k % std::size(kPalette)];
    cv::polylines(img, pts, false, color, 2, cv::LINE_AA);
    const int ly = py(1) + 20 + static_cast<int>(k) * 20;
    cv::line(img, {W - 200, ly - 4}, {W - 170, ly - 4}, color, 2);
    cv::putText(img, curves[k].first, {W - 162, ly}, font, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  if (!cv::imwrite(png.string(), img)) throw IoError("cannot write " + png.string());
}

std::vector<fs::path> emit_plots(const std::vector<LabeledReport>& reports, const fs::path& out_dir) {
  if (reports.empty()) throw ValueError("emit_plots: no reports");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

  struct Kind {
    const char* name;
    const char* title;
    const char* x_label;
    Curve MetricReport::*curve;
  };
  const Kind kinds[] = {
      {"precision", "Precision plot", "location error threshold (px)", &MetricReport::precision_curve},
      {"norm_precision", "Normalized precision plot", "normalized error threshold",
       &MetricReport::norm_precision_curve},
      {"success", "Success plot", "overlap threshold", &MetricReport::success_curve},
  };
  std::vector<fs::path> written;
  for (const auto& k : kinds) {
    std::vector<LabeledCurve> curves;
    for (const auto& [label, rep] : reports) curves.emplace_back(label, rep.*(k.curve));
    const fs::path csv = out_dir / (std::string(k.name) + "_plot.csv");
    const fs::path png = out_dir / (std::string(k.name) + "_plot.png");
    write_csv(curves, csv);
    render_curves(curves, k.title, k.x_label, png);
    written.push_back(png);
    written.push_back(csv);
  }
  return written;
}

std::vector<LabeledCurve> read_curve_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty curve table " + path.string());
  std::vector<LabeledCurve> curves;
  {
    std::istringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    while (std::getline(hs, cell, ',')) curves.emplace_back(cell, Curve{});
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    const double t = std::stod(cell);
    for (auto& [label, c] : curves) {
      if (!std::getline(ls, cell, ',')) throw IoError("short row in " + path.string());
      c.thresholds.push_back(t);
      c.values.push_back(std::stod(cell));
    }
  }
  return curves;
}

}  // namespace ldenhancer
