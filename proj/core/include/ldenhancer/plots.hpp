#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ldenhancer/tracking_eval.hpp"

namespace ldenhancer {

using LabeledReport = std::pair<std::string, MetricReport>;
using LabeledCurve = std::pair<std::string, Curve>;

// For each of precision, norm_precision and success writes
// <out_dir>/<kind>_plot.png with every report overlaid and
// <out_dir>/<kind>_plot.csv ("threshold,<label>,..."). Returns the paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<LabeledReport>& reports,
                                              const std::filesystem::path& out_dir);

// Inverse of the CSV written by emit_plots; values round-trip exactly.
std::vector<LabeledCurve> read_curve_csv(const std::filesystem::path& path);

void render_curves(const std::vector<LabeledCurve>& curves, const std::string& title, const std::string& x_label,
                   const std::filesystem::path& png);

}  // namespace ldenhancer
