#include <benchmark/benchmark.h>

#include <array>
#include <utility>
#include <vector>

#include "windnbm/mlp.hpp"
#include "windnbm/rng.hpp"

namespace {

using namespace windnbm;

RegressionDataset random_dataset(int n, int target_dim) {
    Rng rng(derive_seed(7, "bench-mlp"));
    RegressionDataset ds;
    ds.target_dim = target_dim;
    for (int i = 0; i < n; ++i) {
        ds.features.push_back({rng.next_unit(), rng.next_unit(), rng.next_unit()});
        for (int t = 0; t < target_dim; ++t) ds.targets.push_back(rng.next_unit());
    }
    return ds;
}

PresetKind preset_from_range(const benchmark::State& state) {
    return state.range(0) == 0 ? PresetKind::single_target : PresetKind::multi_target;
}

void BM_ForwardInference(benchmark::State& state) {
    const MlpArchitecture arch = preset_architecture(preset_from_range(state));
    const MlpModel model = init_model(arch, 7);
    const std::array<double, 3> x{0.4, 0.2, 0.7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(model, x));
    }
}
BENCHMARK(BM_ForwardInference)->Arg(0)->Arg(1);

void BM_PredictSeries(benchmark::State& state) {
    const MlpArchitecture arch = preset_architecture(preset_from_range(state));
    const MlpModel model = init_model(arch, 7);
    const RegressionDataset ds = random_dataset(12960, arch.output_dim);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_series(model, ds.features));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_PredictSeries)->Arg(0)->Arg(1);

// One Adam epoch over a month of samples, including the seeded shuffle.
void BM_TrainEpoch(benchmark::State& state) {
    const MlpArchitecture arch = preset_architecture(preset_from_range(state));
    const RegressionDataset ds = random_dataset(4320, arch.output_dim);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(ds, arch, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GradientCheck(benchmark::State& state) {
    const MlpArchitecture arch = preset_architecture(preset_from_range(state));
    const MlpModel model = init_model(arch, 7);
    const RegressionDataset ds = random_dataset(1, arch.output_dim);
    const std::span<const double> x(ds.features[0].data(), 3);
    const std::span<const double> y(ds.targets.data(), ds.targets.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(gradient_check(model, x, y, 1e-5));
    }
}
BENCHMARK(BM_GradientCheck)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
