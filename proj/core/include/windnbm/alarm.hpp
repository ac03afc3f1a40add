#ifndef WINDNBM_ALARM_HPP
#define WINDNBM_ALARM_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "windnbm/scada.hpp"

namespace windnbm {

/// Signed residuals (observed minus predicted, normalized units) aligned to
/// an absolute step range. Positive means over-temperature.
struct ResidualSeries {
    std::vector<double> values;
    std::int64_t start_step = 0;
};

ResidualSeries residuals(std::span<const double> observed, std::span<const double> predicted,
                         std::int64_t start_step = 0);

/// Empirical quantile with linear interpolation between order statistics:
/// h = q * (n - 1), result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
/// Requires non-empty input and q in (0, 1).
double percentile(std::span<const double> values, double q);

/// 99.9th-percentile alarm level fitted on fault-free residuals.
struct Threshold {
    double q999 = 0.0;
    StepRange calibrated_on;
    std::int64_t n_calibration = 0;
    bool low_sample_warning = false;  // fewer than 10,000 calibration samples
};

/// Errors below 1000 samples; flags a warning below 10,000.
Threshold calibrate_threshold(const ResidualSeries& calibration_residuals);

enum class AlarmCriterion {
    criterion_1,  // > 8 of the past 24 hours above the threshold
    criterion_2,  // 8-hour rolling mean above the threshold
};

const char* to_string(AlarmCriterion c);

constexpr int kCriterion1Window = 144;      // 24 h of 10-minute steps
constexpr int kCriterion1MinExceed = 48;    // alarm when count > 48, i.e. >= 49
constexpr int kCriterion2Window = 48;       // 8 h of 10-minute steps

/// Per-step alarm flags aligned to the residual series. `warmup` is the
/// rolling-window length; a flag is computable once a full window of history
/// exists, so the first warmup - 1 flags are always false.
struct AlarmSeries {
    std::vector<std::uint8_t> flags;
    std::int64_t start_step = 0;
    AlarmCriterion criterion = AlarmCriterion::criterion_1;
    int warmup = 0;

    std::size_t size() const { return flags.size(); }
    /// First step with a computable flag.
    std::int64_t first_defined_step() const { return start_step + warmup - 1; }
};

/// Alarm when strictly more than 8 of the past 24 hours exceeded the
/// threshold: flag[t] = (#{i in [t-143, t] : residual[i] > q999} > 48).
AlarmSeries alarm_criterion_1(const ResidualSeries& residuals, const Threshold& thr);

/// Alarm when the past-8-hour mean strictly exceeds the threshold:
/// flag[t] = (mean(residual[t-47 .. t]) > q999). Window sums are recomputed
/// left to right per step, so flags do not depend on how the series was
/// chunked.
AlarmSeries alarm_criterion_2(const ResidualSeries& residuals, const Threshold& thr);

/// Smallest step >= from_step whose flag is true.
std::optional<std::int64_t> first_alarm(const AlarmSeries& alarms, std::int64_t from_step);

/// Plot-reproduction export: `step,residual,threshold,flag_c1,flag_c2`.
void write_alarm_trace_csv(std::ostream& out, const ResidualSeries& residuals,
                           const Threshold& thr, const AlarmSeries& c1, const AlarmSeries& c2);

}  // namespace windnbm

#endif
