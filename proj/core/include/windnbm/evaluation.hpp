#ifndef WINDNBM_EVALUATION_HPP
#define WINDNBM_EVALUATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "windnbm/alarm.hpp"
#include "windnbm/fault.hpp"
#include "windnbm/mlp.hpp"
#include "windnbm/scada.hpp"
#include "windnbm/stats.hpp"

namespace windnbm {

/// Hours from onset to the first true flag at a step >= onset_step; empty
/// when no such flag exists. Flags before the onset never yield negative
/// delays; they are false positives.
std::optional<double> detection_delay(const AlarmSeries& alarms, std::int64_t onset_step);

/// Fraction of true flags over the inclusive range [first_alarm_step,
/// end_step]. Requires the flag at first_alarm_step to be set.
double detection_stability(const AlarmSeries& alarms, std::int64_t first_alarm_step,
                           std::int64_t end_step);

/// Count of true flags strictly before onset_step. Warmup steps carry false
/// flags by construction, so they never contribute.
int false_positives_before_onset(const AlarmSeries& alarms, std::int64_t onset_step);

struct DetectionOutcome {
    ExperimentCase grid_case;
    PresetKind model = PresetKind::single_target;
    AlarmCriterion criterion = AlarmCriterion::criterion_1;
    std::optional<std::int64_t> first_alarm_step;
    std::optional<double> delay_hours;   // set iff detected
    std::optional<double> stability;     // set iff detected
    int false_positives_before_onset = 0;
};

struct SlopeSummary {
    int slope_index = 0;
    int n_cases = 0;
    int n_detected = 0;
    // Sample statistics over detected cases only. Mean needs one detection,
    // standard deviation (divisor n-1) needs two.
    std::optional<double> mean_delay_hours;
    std::optional<double> std_delay_hours;
    std::optional<double> mean_stability;
    std::optional<double> std_stability;
};

/// Aggregates outcomes that share a slope_index; throws otherwise.
SlopeSummary summarize_slope(std::span<const DetectionOutcome> outcomes);

enum class ComparisonMetric { delay_hours, stability };
const char* to_string(ComparisonMetric m);

enum class TTestStatus { ok, insufficient_pairs, zero_variance };
const char* to_string(TTestStatus s);

/// Paired single-vs-multi test over cases detected by both models under one
/// criterion. Sequence a holds the single-target values, b the multi-target
/// values; delays use the one-sided alternative (single greater), stability
/// the two-sided one.
struct PairedComparison {
    AlarmCriterion criterion = AlarmCriterion::criterion_1;
    ComparisonMetric metric = ComparisonMetric::delay_hours;
    int n_pairs = 0;
    int n_excluded = 0;  // grid cases where at least one model missed
    TTestStatus status = TTestStatus::insufficient_pairs;
    std::optional<TTestResult> test;  // present iff status == ok
};

struct ModelCriterionBlock {
    PresetKind model = PresetKind::single_target;
    AlarmCriterion criterion = AlarmCriterion::criterion_1;
    std::vector<DetectionOutcome> outcomes;  // grid order, one per case
    std::vector<SlopeSummary> slopes;        // ascending slope_index
    int n_detected = 0;
};

struct ExperimentConfig {
    SplitSpec split;
    double unit_scale = 0.05;
    // Observation end, inclusive; delays and stabilities stop here. Must lie
    // inside the monitoring range.
    std::int64_t end_step = 0;
    std::vector<AlarmCriterion> criteria = {AlarmCriterion::criterion_1,
                                            AlarmCriterion::criterion_2};
    int n_jobs = 1;
};

struct ComparisonReport {
    ExperimentConfig config;
    ExperimentGrid grid;
    Threshold threshold_single;
    Threshold threshold_multi;
    // Model-major, criteria in config order: single x criteria, then multi.
    std::vector<ModelCriterionBlock> blocks;
    std::vector<PairedComparison> comparisons;  // delay per criterion, then stability
};

const ModelCriterionBlock& find_block(const ComparisonReport& report, PresetKind model,
                                      AlarmCriterion criterion);

/// Runs the full grid: for every case, inject the trend into the normalized
/// gear channel, form residuals against both models, evaluate both criteria,
/// and aggregate. Thresholds are calibrated per model on the calibration
/// range of the fault-free series. Cases may be evaluated on cfg.n_jobs
/// threads; the fold over case results is ordered, so the report does not
/// depend on scheduling.
///
/// Injection only alters the gear target, never a model input, so the
/// residual for a case equals the fault-free residual plus the trend; the
/// implementation relies on that identity to predict once per model.
ComparisonReport run_experiment(const ScadaSeries& normalized, const MlpModel& single_model,
                                const MlpModel& multi_model, const ExperimentGrid& grid,
                                const ExperimentConfig& cfg);

}  // namespace windnbm

#endif
