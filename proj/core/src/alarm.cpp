#include "windnbm/alarm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "windnbm/error.hpp"
#include "windnbm/format.hpp"

namespace windnbm {

const char* to_string(AlarmCriterion c) {
    return c == AlarmCriterion::criterion_1 ? "criterion_1" : "criterion_2";
}

ResidualSeries residuals(std::span<const double> observed, std::span<const double> predicted,
                         std::int64_t start_step) {
    if (observed.size() != predicted.size()) {
        throw Error(ErrorCategory::domain, "residuals: length mismatch (" +
                                               std::to_string(observed.size()) + " vs " +
                                               std::to_string(predicted.size()) + ")");
    }
    ResidualSeries out;
    out.start_step = start_step;
    out.values.resize(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) {
        out.values[i] = observed[i] - predicted[i];
        if (!std::isfinite(out.values[i])) {
            throw Error(ErrorCategory::numeric,
                        "non-finite residual at step " +
                            std::to_string(start_step + static_cast<std::int64_t>(i)));
        }
    }
    return out;
}

double percentile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw Error(ErrorCategory::domain, "percentile of empty sequence");
    }
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCategory::domain, "percentile requires q in (0, 1)");
    }
    const std::size_t n = values.size();
    const double h = q * static_cast<double>(n - 1);
    const auto lo_idx = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo_idx);

    // Partial selection of the two adjacent order statistics.
    std::vector<double> work(values.begin(), values.end());
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo_idx), work.end());
    const double lo = work[lo_idx];
    if (frac == 0.0 || lo_idx + 1 == n) {
        return lo;
    }
    const double hi = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo_idx) + 1,
                                        work.end());
    return lo + frac * (hi - lo);
}

Threshold calibrate_threshold(const ResidualSeries& calibration_residuals) {
    const auto n = static_cast<std::int64_t>(calibration_residuals.values.size());
    if (n < 1000) {
        throw Error(ErrorCategory::domain,
                    "threshold calibration needs at least 1000 residuals, got " +
                        std::to_string(n));
    }
    Threshold thr;
    thr.q999 = percentile(calibration_residuals.values, 0.999);
    thr.calibrated_on = {calibration_residuals.start_step, calibration_residuals.start_step + n};
    thr.n_calibration = n;
    thr.low_sample_warning = n < 10000;
    return thr;
}

AlarmSeries alarm_criterion_1(const ResidualSeries& residuals, const Threshold& thr) {
    const std::size_t n = residuals.values.size();
    if (n < static_cast<std::size_t>(kCriterion1Window)) {
        throw Error(ErrorCategory::domain,
                    "criterion 1 needs at least " + std::to_string(kCriterion1Window) +
                        " residuals, got " + std::to_string(n));
    }
    AlarmSeries out;
    out.start_step = residuals.start_step;
    out.criterion = AlarmCriterion::criterion_1;
    out.warmup = kCriterion1Window;
    out.flags.assign(n, 0);

    // Sliding exceedance count over the inclusive 144-step window.
    int count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (residuals.values[i] > thr.q999) ++count;
        if (i >= static_cast<std::size_t>(kCriterion1Window)) {
            if (residuals.values[i - kCriterion1Window] > thr.q999) --count;
        }
        if (i + 1 >= static_cast<std::size_t>(kCriterion1Window)) {
            out.flags[i] = count > kCriterion1MinExceed ? 1 : 0;
        }
    }
    return out;
}

AlarmSeries alarm_criterion_2(const ResidualSeries& residuals, const Threshold& thr) {
    const std::size_t n = residuals.values.size();
    if (n < static_cast<std::size_t>(kCriterion2Window)) {
        throw Error(ErrorCategory::domain,
                    "criterion 2 needs at least " + std::to_string(kCriterion2Window) +
                        " residuals, got " + std::to_string(n));
    }
    AlarmSeries out;
    out.start_step = residuals.start_step;
    out.criterion = AlarmCriterion::criterion_2;
    out.warmup = kCriterion2Window;
    out.flags.assign(n, 0);

    for (std::size_t i = kCriterion2Window - 1; i < n; ++i) {
        // Window sum recomputed left to right each step; no drifting
        // running sum, so chunked and whole-series evaluation agree bitwise.
        double sum = 0.0;
        for (std::size_t j = i + 1 - kCriterion2Window; j <= i; ++j) {
            sum += residuals.values[j];
        }
        const double window_mean = sum / static_cast<double>(kCriterion2Window);
        out.flags[i] = window_mean > thr.q999 ? 1 : 0;
    }
    return out;
}

std::optional<std::int64_t> first_alarm(const AlarmSeries& alarms, std::int64_t from_step) {
    const std::int64_t last = alarms.start_step + static_cast<std::int64_t>(alarms.size()) - 1;
    if (from_step < alarms.start_step || from_step > last) {
        throw Error(ErrorCategory::domain, "first_alarm: from_step outside alarm range");
    }
    for (std::int64_t s = from_step; s <= last; ++s) {
        if (alarms.flags[static_cast<std::size_t>(s - alarms.start_step)]) {
            return s;
        }
    }
    return std::nullopt;
}

void write_alarm_trace_csv(std::ostream& out, const ResidualSeries& residuals,
                           const Threshold& thr, const AlarmSeries& c1, const AlarmSeries& c2) {
    if (c1.size() != residuals.values.size() || c2.size() != residuals.values.size() ||
        c1.start_step != residuals.start_step || c2.start_step != residuals.start_step) {
        throw Error(ErrorCategory::domain, "alarm trace: misaligned series");
    }
    out << "step,residual,threshold,flag_c1,flag_c2\n";
    for (std::size_t i = 0; i < residuals.values.size(); ++i) {
        out << residuals.start_step + static_cast<std::int64_t>(i) << ','
            << format_double(residuals.values[i]) << ',' << format_double(thr.q999) << ','
            << static_cast<int>(c1.flags[i]) << ',' << static_cast<int>(c2.flags[i]) << '\n';
    }
}

}  // namespace windnbm
