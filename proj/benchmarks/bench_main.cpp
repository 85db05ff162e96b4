#include <benchmark/benchmark.h>

#include "tgopt/data_model.hpp"
#include "tgopt/features.hpp"
#include "tgopt/mtl.hpp"
#include "tgopt/neural.hpp"
#include "tgopt/predictor.hpp"
#include "tgopt/rng.hpp"
#include "tgopt/search.hpp"

namespace {

using namespace tgopt;

std::vector<TaskSplit> synthetic_splits(std::size_t n_tasks) {
  SyntheticSpec spec;
  spec.n_tasks = n_tasks;
  auto synth = synth_taskset(spec);
  auto [norm, stats] = normalize_features(synth.tasks);
  return split_taskset(norm, SplitSpec{});
}

void BM_ForwardBackward(benchmark::State& state) {
  NetSpec spec{{8, 16, 16, 1}, Activation::Tanh, Activation::Linear, 1e-3};
  const Params p = init_params(spec, 1);
  Rng rng(2);
  Eigen::MatrixXd x(64, 8);
  Eigen::VectorXd y(64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(grad(spec, p, x, y, LossKind::MSE));
}
BENCHMARK(BM_ForwardBackward);

void BM_MtlGroupTraining(benchmark::State& state) {
  const auto splits = synthetic_splits(12);
  const std::vector<TaskSplit> group(splits.begin(), splits.begin() + state.range(0));
  MtlArch arch{{}, {8}, {}, Activation::Tanh, Activation::Linear, 0.01};
  TrainConfig tc;
  tc.epochs = 60;
  for (auto _ : state) benchmark::DoNotOptimize(train_mtl(group, arch, tc).total_loss);
}
BENCHMARK(BM_MtlGroupTraining)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_WithinDistance(benchmark::State& state) {
  Rng rng(3);
  Eigen::MatrixXd x(state.range(0), 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(avg_within_distance(x, DistanceKind::Euclidean));
  }
}
BENCHMARK(BM_WithinDistance)->Arg(70)->Arg(512);

void BM_PredictorQuery(benchmark::State& state) {
  Rng rng(4);
  std::vector<TrainingRecord> records;
  for (std::size_t i = 0; i < 40; ++i) {
    GroupFeatures gf;
    gf.n_tasks = 3 + rng.index(5);
    gf.pair_gain_mean = rng.normal();
    gf.mean_group_distance = rng.uniform();
    records.push_back({GroupKey{i, i + 1, i + 2}, gf, 0.5 * gf.pair_gain_mean});
  }
  PredictorConfig pc;
  pc.epochs = 20;
  const auto model = train_predictor(records, PredictorArch{}, pc);
  for (auto _ : state) benchmark::DoNotOptimize(predict_gain(model, records[0].features));
}
BENCHMARK(BM_PredictorQuery);

void BM_UniformPartition(benchmark::State& state) {
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_uniform_partition(static_cast<std::size_t>(state.range(0)), rng));
  }
}
BENCHMARK(BM_UniformPartition)->Arg(12)->Arg(139);

}  // namespace

BENCHMARK_MAIN();
