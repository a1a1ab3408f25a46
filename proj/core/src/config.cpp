#include "ldenhancer/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ldenhancer/error.hpp"

namespace ldenhancer {

using nlohmann::json;

void NetworkConfig::validate() const {
  if (input_size == 0 || input_size % 16 != 0) {
    throw ValueError("network.input_size must be a positive multiple of 16, got " + std::to_string(input_size));
  }
  if (extractor_channels.size() != 4 || decoder_channels.size() != 4) {
    throw ValueError("network: extractor_channels and decoder_channels need four stages");
  }
  for (auto c : extractor_channels)
    if (c == 0) throw ValueError("network.extractor_channels must be positive");
  for (auto c : decoder_channels)
    if (c == 0) throw ValueError("network.decoder_channels must be positive");
  if (decoder_channels.back() != 3) throw ValueError("network.decoder_channels must end with 3");
  if (attention_dim != extractor_channels.back()) {
    throw ValueError("network.attention_dim must equal the last extractor stage width");
  }
  if (attention_heads == 0 || attention_dim % attention_heads != 0) {
    throw ValueError("network.attention_dim must be divisible by attention_heads");
  }
  if (attention_dim % 4 != 0) throw ValueError("network.attention_dim must be a multiple of 4 (2-D encoding)");
  if (ffn_hidden == 0 || estimator_channels == 0) throw ValueError("network: channel counts must be positive");
  if (iterations == 0) throw ValueError("network.iterations must be at least 1");
}

void LossWeights::validate() const {
  for (double l : {spa, col, tv, ie, light})
    if (!(l >= 0)) throw ValueError("loss coefficients must be non-negative");
  if (!(exposure_level > 0 && exposure_level < 1)) throw ValueError("loss.exposure_level must be in (0,1)");
  if (!(alpha > 0)) throw ValueError("loss.alpha must be positive");
  if (!(smoothl1_beta > 0)) throw ValueError("loss.smoothl1_beta must be positive");
  if (region_size == 0) throw ValueError("loss.region_size must be positive");
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || sample_stride == 0 || checkpoint_every == 0) {
    throw ValueError("train: epochs, batch_size, sample_stride, checkpoint_every must be positive");
  }
  if (!(learning_rate > 0) || !(weight_decay >= 0)) throw ValueError("train: invalid learning rate or decay");
  if (!(label_lambda > 0)) throw ValueError("train.label_lambda must be positive");
}

namespace {

json to_json(const AppConfig& c) {
  return json{
      {"network",
       {{"input_size", c.network.input_size},
        {"extractor_channels", c.network.extractor_channels},
        {"decoder_channels", c.network.decoder_channels},
        {"attention_heads", c.network.attention_heads},
        {"attention_dim", c.network.attention_dim},
        {"ffn_hidden", c.network.ffn_hidden},
        {"estimator_channels", c.network.estimator_channels},
        {"iterations", c.network.iterations},
        {"seed", c.network.seed}}},
      {"loss",
       {{"spa", c.loss.spa},
        {"col", c.loss.col},
        {"tv", c.loss.tv},
        {"ie", c.loss.ie},
        {"light", c.loss.light},
        {"exposure_level", c.loss.exposure_level},
        {"alpha", c.loss.alpha},
        {"region_size", c.loss.region_size},
        {"smoothl1_beta", c.loss.smoothl1_beta}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"weight_decay", c.train.weight_decay},
        {"batch_size", c.train.batch_size},
        {"sample_stride", c.train.sample_stride},
        {"seed", c.train.seed},
        {"checkpoint_every", c.train.checkpoint_every},
        {"label_lambda", c.train.label_lambda},
        {"dataset_root", c.train.dataset_root.string()},
        {"label_cache", c.train.label_cache.string()},
        {"out_dir", c.train.out_dir.string()},
        {"resume_from", c.train.resume_from.string()}}},
      {"eval",
       {{"one_based", c.eval.one_based},
        {"precision_threshold", c.eval.precision_threshold},
        {"norm_precision_threshold", c.eval.norm_precision_threshold}}},
  };
}

template <typename V>
void read(const json& section, const char* key, V& out) {
  if (auto it = section.find(key); it != section.end()) out = it->template get<V>();
}

void read_path(const json& section, const char* key, std::filesystem::path& out) {
  if (auto it = section.find(key); it != section.end()) out = it->get<std::string>();
}

AppConfig from_json(const json& j) {
  AppConfig c;
  const json& n = j.at("network");
  read(n, "input_size", c.network.input_size);
  read(n, "extractor_channels", c.network.extractor_channels);
  read(n, "decoder_channels", c.network.decoder_channels);
  read(n, "attention_heads", c.network.attention_heads);
  read(n, "attention_dim", c.network.attention_dim);
  read(n, "ffn_hidden", c.network.ffn_hidden);
  read(n, "estimator_channels", c.network.estimator_channels);
  read(n, "iterations", c.network.iterations);
  read(n, "seed", c.network.seed);
  const json& l = j.at("loss");
  read(l, "spa", c.loss.spa);
  read(l, "col", c.loss.col);
  read(l, "tv", c.loss.tv);
  read(l, "ie", c.loss.ie);
  read(l, "light", c.loss.light);
  read(l, "exposure_level", c.loss.exposure_level);
  read(l, "alpha", c.loss.alpha);
  read(l, "region_size", c.loss.region_size);
  read(l, "smoothl1_beta", c.loss.smoothl1_beta);
  const json& t = j.at("train");
  read(t, "epochs", c.train.epochs);
  read(t, "learning_rate", c.train.learning_rate);
  read(t, "weight_decay", c.train.weight_decay);
  read(t, "batch_size", c.train.batch_size);
  read(t, "sample_stride", c.train.sample_stride);
  read(t, "seed", c.train.seed);
  read(t, "checkpoint_every", c.train.checkpoint_every);
  read(t, "label_lambda", c.train.label_lambda);
  read_path(t, "dataset_root", c.train.dataset_root);
  read_path(t, "label_cache", c.train.label_cache);
  read_path(t, "out_dir", c.train.out_dir);
  read_path(t, "resume_from", c.train.resume_from);
  const json& e = j.at("eval");
  read(e, "one_based", c.eval.one_based);
  read(e, "precision_threshold", c.eval.precision_threshold);
  read(e, "norm_precision_threshold", c.eval.norm_precision_threshold);
  return c;
}

// Recursively merges `patch` into `base`, rejecting keys the schema lacks.
void merge_checked(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ValueError("config: " + (path.empty() ? "root" : path) + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    auto target = base.find(it.key());
    if (target == base.end()) throw ValueError("config: unknown key '" + key + "'");
    if (target->is_object()) {
      merge_checked(*target, it.value(), key);
    } else {
      *target = it.value();
    }
  }
}

void apply_override(json& j, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ValueError("override '" + text + "' is not key=value");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) throw ValueError("override: unknown key '" + key + "'");
    node = &(*node)[part];
  }
  if (node->is_object()) throw ValueError("override: '" + key + "' names a section, not a value");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded() || node->is_string()) value = raw;
  *node = value;
}

AppConfig finish(json j, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) apply_override(j, o);
  AppConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw ValueError(std::string("config: ") + e.what());
  }
  c.network.validate();
  c.loss.validate();
  c.train.validate();
  return c;
}

}  // namespace

AppConfig config_from_json_text(const std::string& text, const std::vector<std::string>& overrides) {
  json base = to_json(AppConfig{});
  json patch = json::parse(text, nullptr, false);
  if (patch.is_discarded()) throw ValueError("config: malformed JSON");
  merge_checked(base, patch, "");
  return finish(std::move(base), overrides);
}

AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return finish(to_json(AppConfig{}), overrides);
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str(), overrides);
}

std::string config_to_json_text(const AppConfig& config) { return to_json(config).dump(2); }

void save_config(const AppConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << config_to_json_text(config) << '\n';
}

}  // namespace ldenhancer
