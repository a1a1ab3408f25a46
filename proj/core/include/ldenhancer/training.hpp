#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldenhancer/config.hpp"
#include "ldenhancer/losses.hpp"
#include "ldenhancer/network.hpp"
#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Raised when a batch produces a non-finite loss. `dump` names the archive
// holding the offending batch.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& what, std::filesystem::path dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::filesystem::path& dump() const { return dump_; }

 private:
  std::filesystem::path dump_;
};

// Image files of one sequence at indices 0, stride, 2 * stride, ... in
// filename order.
std::vector<std::filesystem::path> sample_frames(const std::filesystem::path& sequence_dir, std::size_t stride);

// Reads an 8-bit image and resizes it bilinearly to size x size.
Tensor<float> load_and_resize(const std::filesystem::path& path, std::size_t size);

struct DatasetEntry {
  std::string sequence;
  std::filesystem::path frame;
  std::filesystem::path label;  // cached light-label archive
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
};

// Every subdirectory of `root` is a sequence; a root holding images directly
// is a single sequence. Entries are sorted by (sequence, frame).
DatasetIndex index_dataset(const std::filesystem::path& root, std::size_t stride,
                           const std::filesystem::path& label_cache);

// Computes the light label of every entry whose cache file is missing or was
// made at another size or lambda. Returns the number of labels written.
std::size_t populate_label_cache(const DatasetIndex& index, std::size_t size, double lambda_smooth);

template <typename T>
struct Batch {
  Tensor<T> images;
  Tensor<T> light;    // I_l
  Tensor<T> content;  // I_o
};

// Forward, adjustment and losses in `mode`. With `backprop`, parameter
// gradients are zeroed and then filled from the total loss; with
// `update_stats`, batch-norm running statistics absorb this batch.
template <typename T>
LossReport batch_loss(Network<T>& net, const Batch<T>& batch, const LossWeights& weights, Mode mode,
                      bool backprop = false, bool update_stats = false);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  LossReport loss;        // means over the epoch's batches
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::uint64_t steps = 0;
  std::filesystem::path last_checkpoint;
};

// Trains `net` in place. Writes <out_dir>/loss_log.csv after every epoch and
// <out_dir>/checkpoints/epoch_NNNN.{weights,optim,json} every
// checkpoint_every epochs and after the last one. With train.resume_from set
// to a checkpoint stem, weights, optimizer moments and the loss history are
// restored and training continues at the next epoch.
TrainResult train(const AppConfig& config, const DatasetIndex& index, Network<float>& net,
                  const TrainHooks& hooks = {});

std::string loss_log_csv(const std::vector<EpochLog>& log);

}  // namespace ldenhancer
