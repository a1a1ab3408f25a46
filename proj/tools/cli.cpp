#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ldenhancer/config.hpp"
#include "ldenhancer/enhance.hpp"
#include "ldenhancer/image_io.hpp"
#include "ldenhancer/plots.hpp"
#include "ldenhancer/tracking_eval.hpp"
#include "ldenhancer/training.hpp"
#include "ldenhancer/weight_archive.hpp"

namespace ldenhancer {

namespace fs = std::filesystem;

namespace {

// Invalid invocation detected after parsing (bad config or override).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> positional;
  std::string out_dir;

  std::vector<std::string> overrides() const {
    std::vector<std::string> all = sets;
    all.insert(all.end(), positional.begin(), positional.end());
    return all;
  }
};

// Unknown flags would otherwise land in the positional override list.
const CLI::Validator kKeyValue(
    [](std::string& s) -> std::string {
      if (s.empty() || s[0] == '-') return "unknown option " + s;
      if (s.find('=') == std::string::npos) return "expected key=value, got " + s;
      return {};
    },
    "KEY=VALUE");

// Required options are checked after parsing so that unexpected arguments
// are reported first.
using Required = std::vector<std::pair<CLI::App*, CLI::Option*>>;

CLI::Option* must(Required& req, CLI::App* cmd, CLI::Option* opt) {
  opt->description(opt->get_description() + " (required)");
  req.emplace_back(cmd, opt);
  return opt;
}

void add_common(CLI::App* cmd, Common& c, Required& req, bool needs_out = true) {
  cmd->add_option("--config", c.config, "JSON config with network/loss/train/eval sections")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "dotted key=value override, e.g. train.epochs=5 (repeatable)");
  cmd->add_option("overrides", c.positional, "further key=value overrides")->check(kKeyValue);
  auto* out = cmd->add_option("--out-dir,--out", c.out_dir, "directory receiving every output");
  if (needs_out) must(req, cmd, out);
}

AppConfig configure(const Common& c) {
  try {
    return load_config(c.config, c.overrides());
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os || !(os << text)) throw IoError("cannot write " + p.string());
}

int cmd_label(const Common& c, const std::string& dataset, std::ostream& out) {
  AppConfig cfg = configure(c);
  const fs::path root = dataset.empty() ? cfg.train.dataset_root : fs::path(dataset);
  if (root.empty()) throw UsageError("label: no dataset (use --dataset or train.dataset_root)");
  const DatasetIndex index = index_dataset(root, cfg.train.sample_stride, c.out_dir);
  const std::size_t written = populate_label_cache(index, cfg.network.input_size, cfg.train.label_lambda);
  out << "labels: " << index.entries.size() << " frames, " << written << " written to " << c.out_dir << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& dataset, const std::string& labels, const std::string& resume,
              bool make_labels, std::ostream& out) {
  AppConfig cfg = configure(c);
  cfg.train.out_dir = c.out_dir;
  if (!dataset.empty()) cfg.train.dataset_root = dataset;
  if (!labels.empty()) cfg.train.label_cache = labels;
  if (cfg.train.label_cache.empty()) cfg.train.label_cache = cfg.train.out_dir / "labels";
  if (!resume.empty()) cfg.train.resume_from = resume;
  if (cfg.train.dataset_root.empty()) throw UsageError("train: no dataset (use --dataset or train.dataset_root)");

  const DatasetIndex index = index_dataset(cfg.train.dataset_root, cfg.train.sample_stride, cfg.train.label_cache);
  if (make_labels) populate_label_cache(index, cfg.network.input_size, cfg.train.label_lambda);
  fs::create_directories(cfg.train.out_dir);
  save_config(cfg, cfg.train.out_dir / "config.json");

  Network<float> net(cfg.network);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    out << "epoch " << e.epoch << " total " << e.loss.total << " (spa " << e.loss.spa << ", col " << e.loss.col
        << ", tv " << e.loss.tv << ", ie " << e.loss.ie << ", light " << e.loss.light << ")\n";
    out.flush();
  };
  const TrainResult r = train(cfg, index, net, hooks);
  save_network(net, cfg.train.out_dir / "final.weights");
  out << "trained " << r.steps << " steps; weights in " << (cfg.train.out_dir / "final.weights").string() << '\n';
  return 0;
}

int cmd_enhance(const Common& c, const std::string& weights, const std::string& input, std::size_t iterations,
                bool dump_trace, std::ostream& out) {
  const AppConfig cfg = configure(c);
  Network<float> net(cfg.network);
  load_network(net, weights);

  std::vector<fs::path> inputs;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && is_image_file(e.path())) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw IoError("no images in " + input);
  } else {
    inputs.push_back(input);
  }
  const fs::path out_dir = c.out_dir;
  fs::create_directories(out_dir);
  for (const auto& in : inputs) {
    const Enhancement e = enhance(net, load_image(in), iterations);
    fs::path dst = out_dir / in.stem();
    dst += ".png";
    save_image(e.trace.result(), dst);
    if (dump_trace) {
      WeightArchive a;
      a.add("suppression", e.trace.suppression);
      a.add("enhancement", e.trace.enhancement);
      a.add("light", e.light);
      for (std::size_t k = 0; k < e.trace.frames.size(); ++k) a.add("frame" + std::to_string(k), e.trace.frames[k]);
      fs::path tr = out_dir / in.stem();
      tr += ".trace.ldew";
      a.save(tr);
    }
    out << in.string() << " -> " << dst.string() << '\n';
  }
  return 0;
}

int cmd_eval(const Common& c, const std::string& pred_dir, const std::string& gt_dir, const std::string& attributes,
             bool one_based, const std::string& label, const std::string& base_report, std::ostream& out) {
  const AppConfig cfg = configure(c);
  const auto records = load_records(pred_dir, gt_dir, attributes, one_based || cfg.eval.one_based);
  const MetricReport rep =
      ope_metrics(records, {cfg.eval.precision_threshold, cfg.eval.norm_precision_threshold});
  const fs::path out_dir = c.out_dir;
  fs::create_directories(out_dir);
  write_file(out_dir / "report.json", report_to_json(rep) + "\n");

  std::vector<LabeledReport> plotted{{label, rep}};
  if (!base_report.empty()) {
    const MetricReport base = report_from_json(read_file(base_report));
    plotted.insert(plotted.begin(), {"base", base});
    std::ostringstream js;
    js << "{\n  \"precision\": " << format_delta(improvement_delta(base.precision, rep.precision))
       << ",\n  \"norm_precision\": " << format_delta(improvement_delta(base.norm_precision, rep.norm_precision))
       << ",\n  \"success_auc\": " << format_delta(improvement_delta(base.success_auc, rep.success_auc)) << "\n}\n";
    write_file(out_dir / "improvement.json", js.str());
  }
  emit_plots(plotted, out_dir);
  out << "sequences " << rep.sequences << ", frames " << rep.frames << ", precision " << rep.precision
      << ", norm precision " << rep.norm_precision << ", success AUC " << rep.success_auc << '\n';
  return 0;
}

int cmd_plot(const Common& c, const std::vector<std::string>& reports, std::ostream& out) {
  std::vector<LabeledReport> labeled;
  for (const auto& arg : reports) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("plot: --report expects label=path, got '" + arg + "'");
    labeled.emplace_back(arg.substr(0, eq), report_from_json(read_file(arg.substr(eq + 1))));
  }
  for (const auto& p : emit_plots(labeled, c.out_dir)) out << p.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-light enhancement with light-distribution suppression", "ldenhancer"};
  app.require_subcommand(1);

  Required req;
  Common label_c, train_c, enhance_c, eval_c, plot_c;
  std::string dataset, labels, resume, weights, input, pred_dir, gt_dir, attributes, tracker_label = "tracker",
                                                                                      base_report;
  std::vector<std::string> reports;
  std::size_t iterations = 0;
  bool make_labels = false, dump_trace = false, one_based = false;

  auto* label = app.add_subcommand("label", "compute the light-label cache of a dataset");
  add_common(label, label_c, req);
  label->add_option("--dataset", dataset, "dataset root (one subdirectory per sequence)");

  auto* trainc = app.add_subcommand("train", "train the network; writes loss_log.csv and checkpoints");
  add_common(trainc, train_c, req);
  trainc->add_option("--dataset", dataset, "dataset root (one subdirectory per sequence)");
  trainc->add_option("--labels", labels, "light-label cache (default <out-dir>/labels)");
  trainc->add_option("--resume", resume, "checkpoint stem, e.g. runs/checkpoints/epoch_0050");
  trainc->add_flag("--make-labels", make_labels, "compute missing light labels first");

  auto* enh = app.add_subcommand("enhance", "enhance an image or a directory of images");
  add_common(enh, enhance_c, req);
  must(req, enh, enh->add_option("--weights", weights, "weight archive"))->check(CLI::ExistingFile);
  must(req, enh, enh->add_option("--input", input, "image file or directory"))->check(CLI::ExistingPath);
  enh->add_option("--iterations", iterations, "adjustment iterations (default from config)");
  enh->add_flag("--dump-trace", dump_trace, "also write parameter maps and every iteration");

  auto* ev = app.add_subcommand("eval", "score tracker outputs with one-pass evaluation");
  add_common(ev, eval_c, req);
  must(req, ev, ev->add_option("--pred-dir", pred_dir, "predicted boxes, <sequence>.txt"))->check(CLI::ExistingDirectory);
  must(req, ev, ev->add_option("--gt-dir", gt_dir, "ground-truth boxes, <sequence>.txt"))->check(CLI::ExistingDirectory);
  ev->add_option("--attributes", attributes, "JSON object mapping sequence ids to attribute tags")
      ->check(CLI::ExistingFile);
  ev->add_flag("--one-based", one_based, "box coordinates are 1-based");
  ev->add_option("--label", tracker_label, "curve label in plots");
  ev->add_option("--base-report", base_report, "report.json of the baseline; writes improvement.json")
      ->check(CLI::ExistingFile);

  auto* pl = app.add_subcommand("plot", "overlay curves of one or more report.json files");
  add_common(pl, plot_c, req);
  must(req, pl, pl->add_option("--report", reports, "label=path to report.json (repeatable)"));

  try {
    app.parse(argc, argv);
    for (const auto& [cmd, o] : req)
      if (cmd->parsed() && o->count() == 0) throw CLI::RequiredError(o->get_name());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) {
      err << app.help();
      return 2;
    }
    return 0;
  }

  try {
    if (label->parsed()) return cmd_label(label_c, dataset, out);
    if (trainc->parsed()) return cmd_train(train_c, dataset, labels, resume, make_labels, out);
    if (enh->parsed()) return cmd_enhance(enhance_c, weights, input, iterations, dump_trace, out);
    if (ev->parsed()) return cmd_eval(eval_c, pred_dir, gt_dir, attributes, one_based, tracker_label, base_report, out);
    if (pl->parsed()) return cmd_plot(plot_c, reports, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ldenhancer
