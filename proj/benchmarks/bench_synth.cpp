#include <benchmark/benchmark.h>

#include "windnbm/fault.hpp"
#include "windnbm/scada.hpp"
#include "windnbm/synthetic.hpp"

namespace {

using namespace windnbm;

void BM_Synthesize(benchmark::State& state) {
    SyntheticConfig cfg;
    cfg.n_months = static_cast<int>(state.range(0));
    cfg.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize_scada(cfg));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 4320);
}
BENCHMARK(BM_Synthesize)->Arg(1)->Arg(14)->Unit(benchmark::kMillisecond);

const ScadaSeries& normalized_month() {
    static const ScadaSeries series = [] {
        SyntheticConfig cfg;
        cfg.n_months = 1;
        cfg.seed = 7;
        const ScadaSeries raw = synthesize_scada(cfg);
        return apply_normalization(raw, fit_normalization(raw));
    }();
    return series;
}

void BM_Inject(benchmark::State& state) {
    const ScadaSeries& base = normalized_month();
    FaultSpec spec;
    spec.slope_index = 5;
    spec.onset_step = base.start_step() + 1000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(inject(base, Channel::gear_temp, spec));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(base.size()));
}
BENCHMARK(BM_Inject);

void BM_FitNormalization(benchmark::State& state) {
    SyntheticConfig cfg;
    cfg.n_months = 10;
    cfg.seed = 7;
    const ScadaSeries series = synthesize_scada(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_normalization(series));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(series.size()));
}
BENCHMARK(BM_FitNormalization);

}  // namespace

BENCHMARK_MAIN();
