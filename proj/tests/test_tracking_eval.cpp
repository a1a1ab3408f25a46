#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <random>

#include "ldenhancer/error.hpp"
#include "ldenhancer/plots.hpp"
#include "ldenhancer/tracking_eval.hpp"
#include "ope_oracle.hpp"

using namespace ldenhancer;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lde_test_eval" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Box centered(double cx, double cy, double w = 10, double h = 10) { return {cx - w / 2, cy - h / 2, w, h}; }

TEST(Cle, Examples) {
  const Box b{5, 5, 10, 10};
  EXPECT_EQ(cle(b, b), 0.0);
  EXPECT_DOUBLE_EQ(cle(centered(0, 0), centered(3, 4)), 5.0);
  EXPECT_DOUBLE_EQ(cle(centered(10, 10), centered(10, 30)), 20.0);
}

TEST(Iou, ExamplesAndProperties) {
  const Box a{0, 0, 10, 10};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, Box{20, 20, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, Box{5, 0, 10, 10}), 1.0 / 3.0);
  EXPECT_EQ(iou(Box{}, Box{}), 0.0);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 1000; ++i) {
    const Box p{u(rng), u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng), u(rng)};
    const double v = iou(p, q);
    EXPECT_EQ(v, iou(q, p));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, lde_test::oracle_iou(p, q), 1e-15);
    if (p.area() > 0) {
      EXPECT_EQ(iou(p, p), 1.0);
    }
  }
}

TEST(Ope, PerfectTracker) {
  TrackRecord r{"perfect", {}, {}, {}};
  for (int f = 0; f < 30; ++f) r.gt.push_back({10.0 + f, 20.0, 30, 40});
  r.pred = r.gt;
  const auto rep = ope_metrics({r});
  EXPECT_EQ(rep.precision, 1.0);
  EXPECT_EQ(rep.norm_precision, 1.0);
  // IoU is never strictly above 1, so the curve drops to 0 at the last
  // threshold and the trapezoid loses half a step.
  EXPECT_NEAR(rep.success_auc, 0.975, 1e-12);
  EXPECT_EQ(rep.success_curve.values.front(), 1.0);
}

TEST(Ope, DisplacedTrackerHasZeroPrecision) {
  TrackRecord r{"shifted", {}, {}, {}};
  for (int f = 0; f < 10; ++f) {
    r.gt.push_back({100, 100, 20, 20});
    r.pred.push_back({125, 100, 20, 20});
  }
  const auto rep = ope_metrics({r});
  EXPECT_EQ(rep.precision, 0.0);
  EXPECT_EQ(rep.precision_curve.values[25], 0.0);
  EXPECT_EQ(rep.precision_curve.values[26], 1.0);
}

TEST(Ope, HalfAtPointEightHalfAtPointTwo) {
  TrackRecord r{"mixed", {}, {}, {}};
  const Box gt{0, 0, 100, 100};
  for (int f = 0; f < 20; ++f) {
    r.gt.push_back(gt);
    // Widths 80 and 20 inside the ground truth give IoU 0.8 and 0.2.
    r.pred.push_back(f % 2 ? Box{0, 0, 80, 100} : Box{0, 0, 20, 100});
  }
  const auto rep = ope_metrics({r});
  EXPECT_DOUBLE_EQ(rep.success_curve.values[10], 0.5);
  EXPECT_NEAR(rep.success_auc, lde_test::sweep_success_auc({r}, 21), 1e-12);
  // Both IoU values sit on grid thresholds, so the coarse trapezoid is off
  // from the mean IoU by half a step per jump.
  EXPECT_NEAR(rep.success_auc, 0.5 - 0.025, 1e-12);
}

TEST(Ope, SingleFrameMatchesDirectComputation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 60);
  for (int i = 0; i < 200; ++i) {
    const Box gt{u(rng), u(rng), 1 + u(rng), 1 + u(rng)}, pred{u(rng), u(rng), 1 + u(rng), 1 + u(rng)};
    const auto rep = ope_metrics({TrackRecord{"one", {pred}, {gt}, {}}});
    const double e = lde_test::oracle_cle(pred, gt), o = lde_test::oracle_iou(pred, gt);
    EXPECT_EQ(rep.precision, e < 20 ? 1.0 : 0.0);
    for (std::size_t k = 0; k < rep.success_curve.values.size(); ++k)
      EXPECT_EQ(rep.success_curve.values[k], o > rep.success_curve.thresholds[k] ? 1.0 : 0.0);
    for (std::size_t k = 0; k < rep.precision_curve.values.size(); ++k)
      EXPECT_EQ(rep.precision_curve.values[k], e < rep.precision_curve.thresholds[k] ? 1.0 : 0.0);
  }
}

TEST(Ope, TrapezoidTracksFineSweepAndCurvesAreMonotone) {
  std::mt19937_64 rng(3);
  const auto records = lde_test::random_records(rng, 50);
  const auto rep = ope_metrics(records);
  EXPECT_NEAR(rep.success_auc, lde_test::sweep_success_auc(records, 1001), 0.01);
  EXPECT_NEAR(rep.success_auc, lde_test::sweep_success_auc(records, 21), 1e-12);
  for (std::size_t k = 1; k < rep.success_curve.values.size(); ++k)
    EXPECT_LE(rep.success_curve.values[k], rep.success_curve.values[k - 1]);
  for (std::size_t k = 1; k < rep.precision_curve.values.size(); ++k)
    EXPECT_GE(rep.precision_curve.values[k], rep.precision_curve.values[k - 1]);
  for (std::size_t k = 1; k < rep.norm_precision_curve.values.size(); ++k)
    EXPECT_GE(rep.norm_precision_curve.values[k], rep.norm_precision_curve.values[k - 1]);
  EXPECT_EQ(rep.precision_curve.thresholds.size(), 51u);
  EXPECT_EQ(rep.success_curve.thresholds.size(), 21u);
  EXPECT_EQ(rep.norm_precision_curve.thresholds.size(), 51u);
  for (double v : {rep.precision, rep.norm_precision, rep.norm_precision_auc, rep.success_auc}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Ope, SequencesWeighEqually) {
  TrackRecord hit{"hit", {{0, 0, 10, 10}}, {{0, 0, 10, 10}}, {"IV"}};
  TrackRecord miss{"miss", {}, {}, {"IV", "LR"}};
  for (int f = 0; f < 9; ++f) {
    miss.gt.push_back({0, 0, 10, 10});
    miss.pred.push_back({100, 100, 10, 10});
  }
  const auto rep = ope_metrics({hit, miss});
  EXPECT_DOUBLE_EQ(rep.precision, 0.5);
  EXPECT_EQ(rep.frames, 10u);
  ASSERT_EQ(rep.by_attribute.count("LR"), 1u);
  EXPECT_EQ(rep.by_attribute.at("LR").precision, 0.0);
  EXPECT_DOUBLE_EQ(rep.by_attribute.at("IV").precision, 0.5);
}

TEST(Ope, AbsentGroundTruthIsSkippedAndMismatchNamesSequence) {
  TrackRecord r{"gaps", {{0, 0, 10, 10}, {50, 50, 10, 10}}, {{0, 0, 10, 10}, {0, 0, 0, 0}}, {}};
  EXPECT_EQ(ope_metrics({r}).frames, 1u);
  EXPECT_EQ(ope_metrics({r}).precision, 1.0);
  r.pred.pop_back();
  try {
    ope_metrics({r});
    FAIL();
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("sequence gaps"), std::string::npos);
  }
  EXPECT_THROW(ope_metrics({}), ValueError);
}

TEST(Delta, TableValues) {
  EXPECT_NEAR(improvement_delta(0.372, 0.434), 16.667, 0.005);
  EXPECT_NEAR(improvement_delta(0.474, 0.560), 18.143, 0.005);
  EXPECT_EQ(format_delta(improvement_delta(0.372, 0.434)), "16.667");
  EXPECT_EQ(format_delta(improvement_delta(0.474, 0.560)), "18.143");
  EXPECT_EQ(improvement_delta(0.5, 0.5), 0.0);
  EXPECT_THROW(improvement_delta(0.0, 0.5), ValueError);
  EXPECT_THROW(improvement_delta(-1.0, 0.5), ValueError);
}

TEST(Io, ReadBoxesAndRecords) {
  const auto root = fresh_dir("io");
  fs::create_directories(root / "pred");
  fs::create_directories(root / "gt");
  std::ofstream(root / "gt" / "a.txt") << "1,2,3,4\n5\t6\t7\t8\n";
  std::ofstream(root / "pred" / "a.txt") << "1 2 3 4\n5,6,7,9\n";
  std::ofstream(root / "attrs.json") << R"({"a": ["IV"]})";
  const auto boxes = read_boxes(root / "gt" / "a.txt");
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[1].w, 7.0);
  EXPECT_EQ(read_boxes(root / "gt" / "a.txt", true)[0].x, 0.0);
  const auto recs = load_records(root / "pred", root / "gt", root / "attrs.json");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, "a");
  EXPECT_EQ(recs[0].attributes, std::vector<std::string>{"IV"});
  std::ofstream(root / "gt" / "b.txt") << "1,2,3,4\n";
  EXPECT_THROW(load_records(root / "pred", root / "gt"), IoError);
}

TEST(Io, ReportJsonRoundTrip) {
  std::mt19937_64 rng(4);
  const auto rep = ope_metrics(lde_test::random_records(rng, 5));
  const auto back = report_from_json(report_to_json(rep));
  EXPECT_EQ(back.precision, rep.precision);
  EXPECT_EQ(back.success_auc, rep.success_auc);
  EXPECT_EQ(back.success_curve.values, rep.success_curve.values);
  EXPECT_EQ(back.sequences, rep.sequences);
}

TEST(Plots, CsvRoundTripAndOverlay) {
  const auto root = fresh_dir("plots");
  std::mt19937_64 rng(5);
  const auto base = ope_metrics(lde_test::random_records(rng, 4));
  const auto enhanced = ope_metrics(lde_test::random_records(rng, 4));

  const auto single = emit_plots({{"base", base}}, root / "one");
  EXPECT_EQ(single.size(), 6u);
  const auto curves = read_curve_csv(root / "one" / "success_plot.csv");
  ASSERT_EQ(curves.size(), 1u);
  EXPECT_EQ(curves[0].second.thresholds, base.success_curve.thresholds);
  EXPECT_EQ(curves[0].second.values, base.success_curve.values);

  emit_plots({{"base", base}, {"enhanced", enhanced}}, root / "two");
  const auto both = read_curve_csv(root / "two" / "precision_plot.csv");
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].first, "base");
  EXPECT_EQ(both[1].first, "enhanced");
  EXPECT_EQ(both[1].second.values, enhanced.precision_curve.values);
  const cv::Mat png = cv::imread((root / "two" / "norm_precision_plot.png").string());
  EXPECT_FALSE(png.empty());
}

}  // namespace
