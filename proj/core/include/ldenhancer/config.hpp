#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ldenhancer {

struct NetworkConfig {
  std::size_t input_size = 256;
  std::vector<std::size_t> extractor_channels{4, 4, 8, 8};
  std::vector<std::size_t> decoder_channels{8, 4, 4, 3};
  std::size_t attention_heads = 2;
  std::size_t attention_dim = 8;
  std::size_t ffn_hidden = 32;
  std::size_t estimator_channels = 16;
  std::size_t iterations = 8;
  std::uint64_t seed = 0;

  // Throws ValueError when an invariant does not hold.
  void validate() const;
  std::size_t feature_size() const { return input_size / 16; }
};

struct LossWeights {
  double spa = 10;
  double col = 5;
  double tv = 1;
  double ie = 10;
  double light = 1;
  double exposure_level = 0.6;
  double alpha = 1.0;
  std::size_t region_size = 16;
  double smoothl1_beta = 1.0;

  void validate() const;
};

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-6;
  double weight_decay = 1e-4;
  std::size_t batch_size = 4;
  std::size_t sample_stride = 50;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 10;
  double label_lambda = 10.0;
  std::filesystem::path dataset_root;
  std::filesystem::path label_cache;  // defaults to <out_dir>/labels
  std::filesystem::path out_dir = "runs";
  std::filesystem::path resume_from;  // checkpoint stem, optional

  void validate() const;
};

struct EvalOptions {
  bool one_based = false;
  double precision_threshold = 20.0;
  double norm_precision_threshold = 0.2;
};

struct AppConfig {
  NetworkConfig network;
  LossWeights loss;
  TrainConfig train;
  EvalOptions eval;
};

// Reads a JSON config; missing keys keep their defaults, unknown keys are
// rejected. Overrides are "section.key=value" strings applied after the file.
AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
AppConfig config_from_json_text(const std::string& text, const std::vector<std::string>& overrides = {});
std::string config_to_json_text(const AppConfig& config);
void save_config(const AppConfig& config, const std::filesystem::path& path);

}  // namespace ldenhancer
