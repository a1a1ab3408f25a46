#include <benchmark/benchmark.h>

#include <random>

#include "ldenhancer/adjustment.hpp"
#include "ldenhancer/light_label.hpp"
#include "ldenhancer/network.hpp"
#include "ldenhancer/synthetic.hpp"
#include "ldenhancer/training.hpp"

using namespace ldenhancer;

namespace {

Tensor<float> random_maps(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor<float> t = Tensor<float>::nchw(1, 3, size, size);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.input_size = static_cast<std::size_t>(state.range(0));
  const Network<float> net(cfg);
  const Tensor<float> image = synthetic_uneven_frame(cfg.input_size, 1);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(image));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

// Forward, losses and backward for a batch of four.
static void BM_TrainStep(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.input_size = static_cast<std::size_t>(state.range(0));
  Network<float> net(cfg);
  Batch<float> batch{Tensor<float>::nchw(4, 3, cfg.input_size, cfg.input_size), {}, {}};
  for (std::size_t b = 0; b < 4; ++b) {
    const Tensor<float> f = synthetic_uneven_frame(cfg.input_size, b);
    std::copy_n(f.data(), f.size(), batch.images.sample(b));
  }
  const LightLabelPair<float> label = light_label(batch.images);
  batch.light = label.light;
  batch.content = label.content;
  const LossWeights weights;
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss(net, batch, weights, Mode::kTrain, true, true));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_InterweaveAdjust(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const Tensor<float> image = synthetic_uneven_frame(size, 2);
  const Tensor<float> ps = random_maps(size, 3), pe = random_maps(size, 4);
  for (auto _ : state) benchmark::DoNotOptimize(interweave_adjust(image, ps, pe, 8));
}
BENCHMARK(BM_InterweaveAdjust)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_LightLabel(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const Tensor<double> image = synthetic_uneven_frame(size, 5).cast<double>();
  for (auto _ : state) benchmark::DoNotOptimize(light_label(image));
}
BENCHMARK(BM_LightLabel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
