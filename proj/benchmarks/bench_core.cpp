#include <benchmark/benchmark.h>

#include <cstdint>

#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/layers.hpp"
#include "mvae/matrix.hpp"
#include "mvae/model.hpp"
#include "mvae/rng.hpp"
#include "mvae/trainer.hpp"
#include "mvae/wasserstein.hpp"

namespace {

mvae::Matrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  mvae::SeededRng rng(seed);
  return mvae::gaussian_sample(rng, rows, cols);
}

void bench_affine_forward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  mvae::SeededRng rng(7);
  mvae::AffineLayer layer = mvae::AffineLayer::glorot_uniform(256, 128, rng);
  mvae::Matrix input = random_matrix(11, batch, 256);
  for (auto _ : state) {
    mvae::Matrix out = layer.forward(input);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bench_affine_forward)->Arg(16)->Arg(64);

void bench_affine_backward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  mvae::SeededRng rng(7);
  mvae::AffineLayer layer = mvae::AffineLayer::glorot_uniform(256, 128, rng);
  mvae::Matrix input = random_matrix(11, batch, 256);
  mvae::Matrix upstream = random_matrix(13, batch, 128);
  layer.forward(input);
  for (auto _ : state) {
    mvae::Matrix grad = layer.backward(upstream);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(bench_affine_backward)->Arg(16)->Arg(64);

void bench_wasserstein_quantile(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  mvae::Matrix a = random_matrix(21, batch, 64);
  mvae::Matrix b = random_matrix(22, batch, 48);
  for (auto _ : state) {
    double w = mvae::wasserstein2(a, b, mvae::WassersteinMode::quantile_1d);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(bench_wasserstein_quantile)->Arg(16)->Arg(64);

void bench_wasserstein_gaussian(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  mvae::Matrix a = random_matrix(23, batch, 64);
  mvae::Matrix b = random_matrix(24, batch, 64);
  for (auto _ : state) {
    double w = mvae::wasserstein2(a, b, mvae::WassersteinMode::gaussian_diag);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(bench_wasserstein_gaussian)->Arg(16)->Arg(64);

void bench_train_epoch(benchmark::State& state) {
  mvae::SyntheticSpec spec;
  spec.seen_classes = 4;
  spec.novel_classes = 2;
  spec.samples_per_class = 20;
  spec.d_img = 32;
  spec.d_attr = 8;
  spec.spread = 0.1;
  spec.seed = 5;
  mvae::FeatureDataset data = mvae::generate_synthetic(spec);

  mvae::ModelConfig cfg;
  cfg.d_img = 32;
  cfg.embed_hidden = 16;
  cfg.d_attr_embed = 12;
  cfg.vae_hidden = 24;
  cfg.latent = 8;
  cfg.batch = 20;
  cfg.seed = 5;

  for (auto _ : state) {
    state.PauseTiming();
    mvae::SeededRng root(cfg.seed);
    mvae::SeededRng init = root.substream(mvae::TAG_MODEL_INIT);
    mvae::MvaeModel model(cfg, data.attributes.cols(), init);
    mvae::Trainer trainer(model, cfg, root);
    state.ResumeTiming();
    mvae::LossBreakdown loss = trainer.train_epoch(data);
    benchmark::DoNotOptimize(loss.total);
  }
}
BENCHMARK(bench_train_epoch);

}  // namespace

BENCHMARK_MAIN();
