#include <benchmark/benchmark.h>

#include <vector>

#include "windnbm/alarm.hpp"
#include "windnbm/rng.hpp"

namespace {

using namespace windnbm;

// Three monitoring months of residuals with a sprinkling of exceedances.
const ResidualSeries& monitoring_residuals() {
    static const ResidualSeries series = [] {
        Rng rng(derive_seed(7, "bench-alarm"));
        ResidualSeries res;
        res.start_step = 47520;
        res.values.resize(12960);
        for (double& v : res.values) {
            v = 0.05 * rng.next_gaussian() + (rng.next_unit() < 0.01 ? 0.3 : 0.0);
        }
        return res;
    }();
    return series;
}

Threshold bench_threshold() {
    Threshold thr;
    thr.q999 = 0.2;
    thr.calibrated_on = {43200, 47520};
    thr.n_calibration = 4320;
    return thr;
}

void BM_Criterion1(benchmark::State& state) {
    const ResidualSeries& res = monitoring_residuals();
    const Threshold thr = bench_threshold();
    for (auto _ : state) {
        benchmark::DoNotOptimize(alarm_criterion_1(res, thr));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(res.values.size()));
}
BENCHMARK(BM_Criterion1);

void BM_Criterion2(benchmark::State& state) {
    const ResidualSeries& res = monitoring_residuals();
    const Threshold thr = bench_threshold();
    for (auto _ : state) {
        benchmark::DoNotOptimize(alarm_criterion_2(res, thr));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(res.values.size()));
}
BENCHMARK(BM_Criterion2);

void BM_Percentile(benchmark::State& state) {
    Rng rng(derive_seed(7, "bench-percentile"));
    std::vector<double> values(static_cast<std::size_t>(state.range(0)));
    for (double& v : values) v = rng.next_gaussian();
    for (auto _ : state) {
        benchmark::DoNotOptimize(percentile(values, 0.999));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Percentile)->Arg(4320)->Arg(43200);

void BM_CalibrateThreshold(benchmark::State& state) {
    Rng rng(derive_seed(7, "bench-calibrate"));
    ResidualSeries res;
    res.start_step = 43200;
    res.values.resize(4320);
    for (double& v : res.values) v = 0.05 * rng.next_gaussian();
    for (auto _ : state) {
        benchmark::DoNotOptimize(calibrate_threshold(res));
    }
}
BENCHMARK(BM_CalibrateThreshold);

}  // namespace

BENCHMARK_MAIN();
