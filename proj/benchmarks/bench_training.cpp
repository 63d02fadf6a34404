#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "xmh/codelearn.hpp"
#include "xmh/synth.hpp"
#include "xmh/trainer.hpp"

namespace {

// One mini-batch step on the reference synthetic shape.
void BM_TrainStep(benchmark::State& state) {
  xmh::SynthConfig sc;
  const xmh::io::DatasetBundle bundle = xmh::synth_generate(sc);
  const xmh::PairedDataset data = bundle.data.subset(bundle.train);
  xmh::TrainConfig cfg;
  cfg.code_len = static_cast<std::size_t>(state.range(0));
  cfg.batch_size = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(cfg.seed);
  xmh::TrainState st = xmh::init_state(data, cfg, rng);
  std::vector<std::size_t> idx(cfg.batch_size);
  std::iota(idx.begin(), idx.end(), 0);
  const xmh::PairedDataset batch = data.subset(idx);
  const auto sim = xmh::build_similarity(batch.labels, batch.labels);
  for (auto _ : state) benchmark::DoNotOptimize(xmh::train_step(st, idx, batch.image, batch.text, sim, cfg));
}
BENCHMARK(BM_TrainStep)->Args({16, 64})->Args({64, 64})->Args({16, 256})->Unit(benchmark::kMillisecond);

void BM_CodeUpdate(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  const auto n = static_cast<Eigen::Index>(state.range(1));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXd f(m, n);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = g(rng);
  const xmh::FeatureMatrix out(f);
  const xmh::CodeMatrix h = xmh::sign_matrix(out);
  const auto sim = xmh::SimilarityMatrix::identity(static_cast<std::size_t>(n));
  for (auto _ : state) benchmark::DoNotOptimize(xmh::update_image_codes(out, sim, h, {1e-4}));
}
BENCHMARK(BM_CodeUpdate)->Args({16, 64})->Args({128, 256});

}  // namespace
