#include "windnbm/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "windnbm/error.hpp"

namespace windnbm {

std::optional<double> detection_delay(const AlarmSeries& alarms, std::int64_t onset_step) {
    const auto first = first_alarm(alarms, onset_step);
    if (!first) return std::nullopt;
    return static_cast<double>(*first - onset_step) * 10.0 / 60.0;
}

double detection_stability(const AlarmSeries& alarms, std::int64_t first_alarm_step,
                           std::int64_t end_step) {
    const std::int64_t last = alarms.start_step + static_cast<std::int64_t>(alarms.size()) - 1;
    if (first_alarm_step < alarms.start_step || end_step > last ||
        first_alarm_step > end_step) {
        throw Error(ErrorCategory::domain, "stability range outside the alarm series");
    }
    if (!alarms.flags[static_cast<std::size_t>(first_alarm_step - alarms.start_step)]) {
        throw Error(ErrorCategory::domain, "no alarm at first_alarm_step");
    }
    std::int64_t positives = 0;
    for (std::int64_t s = first_alarm_step; s <= end_step; ++s) {
        positives += alarms.flags[static_cast<std::size_t>(s - alarms.start_step)];
    }
    return static_cast<double>(positives) / static_cast<double>(end_step - first_alarm_step + 1);
}

int false_positives_before_onset(const AlarmSeries& alarms, std::int64_t onset_step) {
    int count = 0;
    const auto n = static_cast<std::int64_t>(alarms.size());
    for (std::int64_t i = 0; i < n && alarms.start_step + i < onset_step; ++i) {
        count += alarms.flags[static_cast<std::size_t>(i)];
    }
    return count;
}

SlopeSummary summarize_slope(std::span<const DetectionOutcome> outcomes) {
    if (outcomes.empty()) {
        throw Error(ErrorCategory::domain, "summarize_slope needs at least one outcome");
    }
    SlopeSummary summary;
    summary.slope_index = outcomes.front().grid_case.slope_index;
    summary.n_cases = static_cast<int>(outcomes.size());

    std::vector<double> delays;
    std::vector<double> stabilities;
    for (const DetectionOutcome& o : outcomes) {
        if (o.grid_case.slope_index != summary.slope_index) {
            throw Error(ErrorCategory::domain, "summarize_slope outcomes mix slopes");
        }
        if (o.delay_hours) {
            delays.push_back(*o.delay_hours);
            stabilities.push_back(*o.stability);
        }
    }
    summary.n_detected = static_cast<int>(delays.size());
    if (!delays.empty()) {
        summary.mean_delay_hours = mean(delays);
        summary.mean_stability = mean(stabilities);
    }
    if (delays.size() >= 2) {
        summary.std_delay_hours = sample_std(delays);
        summary.std_stability = sample_std(stabilities);
    }
    return summary;
}

const char* to_string(ComparisonMetric m) {
    return m == ComparisonMetric::delay_hours ? "delay_hours" : "stability";
}

const char* to_string(TTestStatus s) {
    switch (s) {
        case TTestStatus::ok: return "ok";
        case TTestStatus::insufficient_pairs: return "insufficient_pairs";
        default: return "zero_variance";
    }
}

const ModelCriterionBlock& find_block(const ComparisonReport& report, PresetKind model,
                                      AlarmCriterion criterion) {
    for (const ModelCriterionBlock& b : report.blocks) {
        if (b.model == model && b.criterion == criterion) return b;
    }
    throw Error(ErrorCategory::domain, "report has no block for the requested model/criterion");
}

namespace {

struct ChannelSlice {
    std::vector<std::array<double, 3>> features;  // wind_speed, wind_dir, air_temp
    std::vector<double> gear;
    std::int64_t start_step = 0;
};

// Inclusive [begin, end] slice; the series is contiguous after validation.
ChannelSlice slice_inputs(const ScadaSeries& series, std::int64_t begin, std::int64_t end) {
    ChannelSlice slice;
    slice.start_step = begin;
    const auto offset = static_cast<std::size_t>(begin - series.start_step());
    const auto count = static_cast<std::size_t>(end - begin + 1);
    slice.features.reserve(count);
    slice.gear.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const ScadaRecord& r = series.records[offset + i];
        slice.features.push_back({r.wind_speed, r.wind_dir, r.air_temp});
        slice.gear.push_back(r.gear_temp);
    }
    return slice;
}

// Gear predictions in series order; the multi-target model emits gear first.
std::vector<double> gear_predictions(const MlpModel& model, const ChannelSlice& slice) {
    const auto flat = predict_series(model, slice.features);
    const int k = model.architecture.output_dim;
    if (k == 1) return flat;
    std::vector<double> gear(slice.gear.size());
    for (std::size_t i = 0; i < gear.size(); ++i) {
        gear[i] = flat[i * static_cast<std::size_t>(k)];
    }
    return gear;
}

PairedComparison compare_models(const ModelCriterionBlock& single_block,
                                const ModelCriterionBlock& multi_block,
                                ComparisonMetric metric) {
    PairedComparison cmp;
    cmp.criterion = single_block.criterion;
    cmp.metric = metric;

    std::vector<double> a;
    std::vector<double> b;
    const std::size_t n = single_block.outcomes.size();
    for (std::size_t i = 0; i < n; ++i) {
        const DetectionOutcome& s = single_block.outcomes[i];
        const DetectionOutcome& m = multi_block.outcomes[i];
        const auto& sv = metric == ComparisonMetric::delay_hours ? s.delay_hours : s.stability;
        const auto& mv = metric == ComparisonMetric::delay_hours ? m.delay_hours : m.stability;
        if (sv && mv) {
            a.push_back(*sv);
            b.push_back(*mv);
        }
    }
    cmp.n_pairs = static_cast<int>(a.size());
    cmp.n_excluded = static_cast<int>(n) - cmp.n_pairs;
    if (cmp.n_pairs < 2) {
        cmp.status = TTestStatus::insufficient_pairs;
        return cmp;
    }
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    if (sample_std(d) == 0.0) {
        cmp.status = TTestStatus::zero_variance;
        return cmp;
    }
    cmp.status = TTestStatus::ok;
    cmp.test = paired_t_test(a, b,
                             metric == ComparisonMetric::delay_hours ? Alternative::a_greater
                                                                    : Alternative::two_sided);
    return cmp;
}

}  // namespace

ComparisonReport run_experiment(const ScadaSeries& normalized, const MlpModel& single_model,
                                const MlpModel& multi_model, const ExperimentGrid& grid,
                                const ExperimentConfig& cfg) {
    if (!normalized.normalized) {
        throw Error(ErrorCategory::state, "run_experiment requires a normalized series");
    }
    validate_series(normalized);
    validate_split(cfg.split, normalized);
    if (single_model.architecture.output_dim != 1) {
        throw Error(ErrorCategory::domain, "single-target model must have one output");
    }
    if (multi_model.architecture.output_dim != 3) {
        throw Error(ErrorCategory::domain, "multi-target model must have three outputs");
    }
    if (!cfg.split.monitoring.contains(cfg.end_step)) {
        throw Error(ErrorCategory::domain, "end_step must lie in the monitoring range");
    }
    if (cfg.criteria.empty()) {
        throw Error(ErrorCategory::config, "no alarm criteria selected");
    }
    for (std::size_t i = 0; i < cfg.criteria.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.criteria.size(); ++j) {
            if (cfg.criteria[i] == cfg.criteria[j]) {
                throw Error(ErrorCategory::config, "duplicate alarm criterion");
            }
        }
    }
    if (cfg.unit_scale < 0.0) {
        throw Error(ErrorCategory::config, "unit_scale must be >= 0");
    }
    if (cfg.n_jobs < 1) {
        throw Error(ErrorCategory::config, "n_jobs must be >= 1");
    }
    if (grid.cases.empty()) {
        throw Error(ErrorCategory::domain, "empty experiment grid");
    }
    for (const ExperimentCase& c : grid.cases) {
        if (!cfg.split.monitoring.contains(c.onset_step) || c.onset_step > cfg.end_step) {
            throw Error(ErrorCategory::domain,
                        "onset " + std::to_string(c.onset_step) +
                            " outside the monitoring range");
        }
        if (c.slope_index < kMinSlopeIndex || c.slope_index > kMaxSlopeIndex) {
            throw Error(ErrorCategory::domain, "slope_index must be in [1, 10]");
        }
    }

    ComparisonReport report;
    report.config = cfg;
    report.grid = grid;

    // Per-model thresholds from fault-free calibration residuals.
    const auto cal = slice_inputs(normalized, cfg.split.calibration.begin,
                                  cfg.split.calibration.end - 1);
    const std::array<const MlpModel*, 2> models = {&single_model, &multi_model};
    const std::array<PresetKind, 2> kinds = {PresetKind::single_target,
                                             PresetKind::multi_target};
    std::array<Threshold, 2> thresholds;
    for (int m = 0; m < 2; ++m) {
        const auto pred = gear_predictions(*models[static_cast<std::size_t>(m)], cal);
        thresholds[static_cast<std::size_t>(m)] =
            calibrate_threshold(residuals(cal.gear, pred, cal.start_step));
    }
    report.threshold_single = thresholds[0];
    report.threshold_multi = thresholds[1];

    // Fault-free monitoring slice, predicted once per model. Injection only
    // shifts the observed gear value, so each case residual is
    // (observed + trend) - prediction, bit-identical to the inject path.
    const std::int64_t mon_begin = cfg.split.monitoring.begin;
    const auto mon = slice_inputs(normalized, mon_begin, cfg.end_step);
    const std::size_t n_steps = mon.gear.size();
    std::array<std::vector<double>, 2> predictions;
    for (int m = 0; m < 2; ++m) {
        predictions[static_cast<std::size_t>(m)] =
            gear_predictions(*models[static_cast<std::size_t>(m)], mon);
    }

    for (int m = 0; m < 2; ++m) {
        for (AlarmCriterion crit : cfg.criteria) {
            ModelCriterionBlock block;
            block.model = kinds[static_cast<std::size_t>(m)];
            block.criterion = crit;
            block.outcomes.resize(grid.cases.size());
            report.blocks.push_back(std::move(block));
        }
    }

    const auto evaluate_case = [&](std::size_t case_idx, ResidualSeries& scratch) {
        const ExperimentCase& c = grid.cases[case_idx];
        FaultSpec spec;
        spec.slope_index = c.slope_index;
        spec.onset_step = c.onset_step;
        spec.unit_scale = cfg.unit_scale;

        scratch.start_step = mon_begin;
        scratch.values.resize(n_steps);
        std::size_t block_idx = 0;
        for (int m = 0; m < 2; ++m) {
            const auto& pred = predictions[static_cast<std::size_t>(m)];
            for (std::size_t i = 0; i < n_steps; ++i) {
                const double injected =
                    mon.gear[i] + trend_value(spec, mon_begin + static_cast<std::int64_t>(i));
                scratch.values[i] = injected - pred[i];
            }
            const Threshold& thr = thresholds[static_cast<std::size_t>(m)];
            for (AlarmCriterion crit : cfg.criteria) {
                const AlarmSeries alarms = crit == AlarmCriterion::criterion_1
                                               ? alarm_criterion_1(scratch, thr)
                                               : alarm_criterion_2(scratch, thr);
                DetectionOutcome outcome;
                outcome.grid_case = c;
                outcome.model = kinds[static_cast<std::size_t>(m)];
                outcome.criterion = crit;
                outcome.first_alarm_step = first_alarm(alarms, c.onset_step);
                if (outcome.first_alarm_step) {
                    outcome.delay_hours = detection_delay(alarms, c.onset_step);
                    outcome.stability =
                        detection_stability(alarms, *outcome.first_alarm_step, cfg.end_step);
                }
                outcome.false_positives_before_onset =
                    false_positives_before_onset(alarms, c.onset_step);
                report.blocks[block_idx].outcomes[case_idx] = std::move(outcome);
                ++block_idx;
            }
        }
    };

    const std::size_t n_cases = grid.cases.size();
    const int n_workers =
        static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.n_jobs), n_cases));
    if (n_workers <= 1) {
        ResidualSeries scratch;
        for (std::size_t i = 0; i < n_cases; ++i) evaluate_case(i, scratch);
    } else {
        // Workers claim case indices and write into disjoint preallocated
        // slots; everything downstream is a sequential fold in grid order.
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                ResidualSeries scratch;
                try {
                    for (std::size_t i = next.fetch_add(1); i < n_cases;
                         i = next.fetch_add(1)) {
                        evaluate_case(i, scratch);
                    }
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (std::thread& t : workers) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (ModelCriterionBlock& block : report.blocks) {
        block.n_detected = static_cast<int>(
            std::count_if(block.outcomes.begin(), block.outcomes.end(),
                          [](const DetectionOutcome& o) { return o.delay_hours.has_value(); }));
        std::map<int, std::vector<DetectionOutcome>> by_slope;
        for (const DetectionOutcome& o : block.outcomes) {
            by_slope[o.grid_case.slope_index].push_back(o);
        }
        for (const auto& [slope, outcomes] : by_slope) {
            block.slopes.push_back(summarize_slope(outcomes));
        }
    }

    for (ComparisonMetric metric : {ComparisonMetric::delay_hours, ComparisonMetric::stability}) {
        for (AlarmCriterion crit : cfg.criteria) {
            report.comparisons.push_back(
                compare_models(find_block(report, PresetKind::single_target, crit),
                               find_block(report, PresetKind::multi_target, crit), metric));
        }
    }
    return report;
}

}  // namespace windnbm
