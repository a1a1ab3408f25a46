#include "ldenhancer/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "ldenhancer/adjustment.hpp"
#include "ldenhancer/image_io.hpp"
#include "ldenhancer/light_label.hpp"
#include "ldenhancer/optimizer.hpp"
#include "ldenhancer/weight_archive.hpp"

namespace ldenhancer {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

bool label_is_current(const fs::path& path, std::size_t size, double lambda) {
  if (!fs::exists(path)) return false;
  try {
    const WeightArchive a = WeightArchive::load(path);
    const ArchiveEntry* meta = a.find("meta");
    return meta && meta->values.size() == 2 && meta->values[0] == static_cast<float>(size) &&
           meta->values[1] == static_cast<float>(lambda);
  } catch (const IoError&) {
    return false;
  }
}

std::string checkpoint_stem(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04zu", epoch);
  return buf;
}

nlohmann::json log_to_json(const std::vector<EpochLog>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : log)
    arr.push_back({e.epoch, e.loss.spa, e.loss.col, e.loss.tv, e.loss.ie, e.loss.light, e.loss.total});
  return arr;
}

std::vector<EpochLog> log_from_json(const nlohmann::json& arr) {
  std::vector<EpochLog> log;
  for (const auto& row : arr) {
    EpochLog e;
    e.epoch = row.at(0).get<std::size_t>();
    e.loss = {row.at(1).get<double>(), row.at(2).get<double>(), row.at(3).get<double>(),
              row.at(4).get<double>(), row.at(5).get<double>(), row.at(6).get<double>()};
    log.push_back(e);
  }
  return log;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os || !(os << text)) throw IoError("cannot write " + path.string());
}

struct Sample {
  Tensor<float> image, light, content;
};

Batch<float> gather(const std::vector<Sample>& data, const std::vector<std::size_t>& order, std::size_t first,
                    std::size_t count) {
  const Dims& d = data[order[first]].image.dims();
  Batch<float> b{Tensor<float>::nchw(count, d[1], d[2], d[3]), Tensor<float>::nchw(count, d[1], d[2], d[3]),
                 Tensor<float>::nchw(count, d[1], d[2], d[3])};
  const std::size_t n = data[order[first]].image.size();
  for (std::size_t k = 0; k < count; ++k) {
    const Sample& s = data[order[first + k]];
    std::copy_n(s.image.data(), n, b.images.sample(k));
    std::copy_n(s.light.data(), n, b.light.sample(k));
    std::copy_n(s.content.data(), n, b.content.sample(k));
  }
  return b;
}

}  // namespace

std::vector<fs::path> sample_frames(const fs::path& sequence_dir, std::size_t stride) {
  if (stride == 0) throw ValueError("sample_frames: stride must be positive");
  if (!fs::is_directory(sequence_dir)) throw IoError("not a directory: " + sequence_dir.string());
  const auto files = image_files(sequence_dir);
  if (files.empty()) throw IoError("no frames in " + sequence_dir.string());
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < files.size(); i += stride) out.push_back(files[i]);
  return out;
}

Tensor<float> load_and_resize(const fs::path& path, std::size_t size) {
  if (size == 0) throw ValueError("load_and_resize: size must be positive");
  return load_image(path, size);
}

DatasetIndex index_dataset(const fs::path& root, std::size_t stride, const fs::path& label_cache) {
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
  std::vector<fs::path> sequences;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) sequences.push_back(e.path());
  std::sort(sequences.begin(), sequences.end());
  if (sequences.empty()) sequences.push_back(root);

  DatasetIndex index;
  for (const auto& seq : sequences) {
    const std::string id = seq == root ? root.filename().string() : seq.filename().string();
    for (const auto& frame : sample_frames(seq, stride)) {
      fs::path label = label_cache / id / frame.stem();
      label += ".ldew";
      index.entries.push_back({id, frame, label});
    }
  }
  return index;
}

std::size_t populate_label_cache(const DatasetIndex& index, std::size_t size, double lambda) {
  std::size_t written = 0;
  for (const auto& e : index.entries) {
    if (label_is_current(e.label, size, lambda)) continue;
    const Tensor<double> image = load_and_resize(e.frame, size).cast<double>();
    const LightLabelPair<double> pair = light_label(image, lambda);
    WeightArchive a;
    a.add("light", pair.light);
    a.add("content", pair.content);
    a.add("meta", Dims{2}, {static_cast<float>(size), static_cast<float>(lambda)});
    fs::create_directories(e.label.parent_path());
    a.save(e.label);
    ++written;
  }
  return written;
}

template <typename T>
LossReport batch_loss(Network<T>& net, const Batch<T>& batch, const LossWeights& w, Mode mode, bool backprop,
                      bool update_stats) {
  Tape<T> tape;
  const bool taped = backprop || update_stats;
  const ForwardResult<T> r = net.forward(batch.images, mode, taped ? &tape : nullptr);
  const AdjustmentTrace<T> trace =
      interweave_adjust(batch.images, r.suppression, r.enhancement, net.config().iterations);
  const Tensor<T>& enhanced = trace.result();
  const Tensor<T> diff = r.enhancement - r.suppression;

  Tensor<T> g_spa, g_col, g_tv, g_ie, g_light;
  LossParts parts;
  parts.spa = loss_spa(enhanced, batch.content, backprop ? &g_spa : nullptr);
  parts.col = loss_col(enhanced, backprop ? &g_col : nullptr);
  parts.tv = loss_tv(diff, backprop ? &g_tv : nullptr);
  parts.ie = loss_ie(enhanced, w.exposure_level, w.alpha, w.smoothl1_beta, w.region_size, backprop ? &g_ie : nullptr);
  parts.light = loss_light(r.light, batch.light, w.smoothl1_beta, backprop ? &g_light : nullptr);
  const LossReport report = loss_total(parts, w);

  if (backprop) {
    Tensor<T> d_enh(enhanced.dims());
    for (std::size_t i = 0; i < d_enh.size(); ++i)
      d_enh[i] = static_cast<T>(w.spa * g_spa[i] + w.col * g_col[i] + w.ie * g_ie[i]);
    AdjustmentGrads<T> adj = interweave_adjust_backward(trace, d_enh);
    for (std::size_t i = 0; i < g_tv.size(); ++i) {
      const T g = static_cast<T>(w.tv * g_tv[i]);
      adj.enhancement[i] += g;
      adj.suppression[i] -= g;
    }
    for (std::size_t i = 0; i < g_light.size(); ++i) g_light[i] *= static_cast<T>(w.light);
    net.zero_grad();
    net.backward(tape, adj.suppression, adj.enhancement, g_light);
  }
  if (update_stats) net.update_running_stats(tape);
  return report;
}

template LossReport batch_loss<float>(Network<float>&, const Batch<float>&, const LossWeights&, Mode, bool, bool);
template LossReport batch_loss<double>(Network<double>&, const Batch<double>&, const LossWeights&, Mode, bool, bool);

std::string loss_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,spa,col,tv,ie,light,total\n";
  char buf[512];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.loss.spa, e.loss.col,
                  e.loss.tv, e.loss.ie, e.loss.light, e.loss.total);
    os << buf;
  }
  return os.str();
}

TrainResult train(const AppConfig& config, const DatasetIndex& index, Network<float>& net, const TrainHooks& hooks) {
  const TrainConfig& tc = config.train;
  tc.validate();
  config.loss.validate();
  if (index.entries.empty()) throw ValueError("train: empty dataset index");
  const std::size_t size = net.config().input_size;

  std::vector<Sample> data;
  data.reserve(index.entries.size());
  for (const auto& e : index.entries) {
    if (!fs::exists(e.label)) throw IoError("missing light-label cache entry " + e.label.string());
    const WeightArchive a = WeightArchive::load(e.label);
    Sample s{load_and_resize(e.frame, size), a.tensor<float>("light"), a.tensor<float>("content")};
    if (s.light.dims() != s.image.dims() || s.content.dims() != s.image.dims()) {
      throw ShapeError("light-label cache entry " + e.label.string() + " has shape " + to_string(s.light.dims()) +
                       ", expected " + to_string(s.image.dims()));
    }
    data.push_back(std::move(s));
  }

  AdamW<float> optim(net.parameters(), {tc.learning_rate, tc.weight_decay});
  TrainResult result;
  std::size_t first_epoch = 1;
  if (!tc.resume_from.empty()) {
    fs::path stem = tc.resume_from;
    auto with = [&](const char* ext) {
      fs::path p = stem;
      p += ext;
      return p;
    };
    load_network(net, with(".weights"));
    optim.load_state(WeightArchive::load(with(".optim")));
    std::ifstream is(with(".json"));
    if (!is) throw IoError("cannot read checkpoint metadata " + with(".json").string());
    const nlohmann::json meta = nlohmann::json::parse(is);
    if (meta.at("seed").get<std::uint64_t>() != tc.seed) throw ValueError("resume: checkpoint seed differs from config");
    result.log = log_from_json(meta.at("log"));
    first_epoch = meta.at("epoch").get<std::size_t>() + 1;
  }

  const fs::path ckpt_dir = tc.out_dir / "checkpoints";
  fs::create_directories(ckpt_dir);
  const std::size_t B = tc.batch_size;
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = first_epoch; epoch <= tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(tc.seed ^ (0x9E3779B97F4A7C15ull * epoch));
    std::shuffle(order.begin(), order.end(), rng);

    LossReport sum;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += B) {
      const std::size_t count = std::min(B, order.size() - first);
      const Batch<float> batch = gather(data, order, first, count);
      LossReport r;
      try {
        r = batch_loss(net, batch, config.loss, Mode::kTrain, true, true);
      } catch (const ValueError& err) {
        char name[64];
        std::snprintf(name, sizeof name, "nonfinite_epoch%04zu_batch%04zu.ldew", epoch, batches);
        WeightArchive dump;
        dump.add("images", batch.images);
        dump.add("light", batch.light);
        dump.add("content", batch.content);
        dump.save(tc.out_dir / name);
        throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batches) + " (" + err.what() + "); batch written to " +
                                     (tc.out_dir / name).string(),
                                 tc.out_dir / name);
      }
      optim.step();
      sum.spa += r.spa;
      sum.col += r.col;
      sum.tv += r.tv;
      sum.ie += r.ie;
      sum.light += r.light;
      sum.total += r.total;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    EpochLog entry{epoch,
                   {sum.spa * inv, sum.col * inv, sum.tv * inv, sum.ie * inv, sum.light * inv, sum.total * inv}};
    result.log.push_back(entry);
    write_text(tc.out_dir / "loss_log.csv", loss_log_csv(result.log));
    if (hooks.on_epoch) hooks.on_epoch(entry);

    if (epoch % tc.checkpoint_every == 0 || epoch == tc.epochs) {
      const fs::path stem = ckpt_dir / checkpoint_stem(epoch);
      auto with = [&](const char* ext) {
        fs::path p = stem;
        p += ext;
        return p;
      };
      save_network(net, with(".weights"));
      optim.state().save(with(".optim"));
      nlohmann::json meta;
      meta["epoch"] = epoch;
      meta["seed"] = tc.seed;
      meta["steps"] = optim.steps();
      meta["config"] = nlohmann::json::parse(config_to_json_text(config));
      meta["log"] = log_to_json(result.log);
      write_text(with(".json"), meta.dump(2));
      result.last_checkpoint = stem;
    }
  }
  result.steps = optim.steps();
  return result;
}

}  // namespace ldenhancer
