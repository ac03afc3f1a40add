#include "windnbm/fault.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>

#include "windnbm/error.hpp"
#include "windnbm/format.hpp"
#include "windnbm/rng.hpp"

namespace windnbm {

std::vector<std::int64_t> sample_onsets(const OnsetWindow& window, int n, std::uint64_t seed) {
    if (window.length() < 1) {
        throw Error(ErrorCategory::domain, "empty onset window");
    }
    if (n < 1) {
        throw Error(ErrorCategory::domain, "sample_onsets requires n >= 1");
    }
    Rng rng(seed);
    std::vector<std::int64_t> onsets(static_cast<std::size_t>(n));
    for (auto& onset : onsets) {
        onset = rng.next_in_range(window.start_step, window.end_step);
    }
    return onsets;
}

double trend_value(const FaultSpec& spec, std::int64_t step) {
    if (spec.unit_scale < 0.0) {
        throw Error(ErrorCategory::domain, "unit_scale must be >= 0");
    }
    if (step <= spec.onset_step) {
        return 0.0;
    }
    const double days = static_cast<double>(step - spec.onset_step) /
                        static_cast<double>(kStepsPerDay);
    return static_cast<double>(spec.slope_index) * spec.unit_scale * days;
}

ScadaSeries inject(const ScadaSeries& series, Channel channel, const FaultSpec& spec) {
    if (channel != Channel::gear_temp) {
        throw Error(ErrorCategory::domain,
                    std::string("injection target must be gear_temp, got ") +
                        channel_name(channel));
    }
    if (!series.normalized) {
        throw Error(ErrorCategory::state, "inject requires a normalized series");
    }
    if (series.empty() || spec.onset_step < series.start_step() ||
        spec.onset_step > series.end_step()) {
        throw Error(ErrorCategory::domain, "onset step outside the series");
    }
    if (spec.slope_index < kMinSlopeIndex || spec.slope_index > kMaxSlopeIndex) {
        throw Error(ErrorCategory::domain, "slope_index must be in [1, 10]");
    }
    ScadaSeries out = series;
    for (ScadaRecord& r : out.records) {
        r.channel(channel) += trend_value(spec, r.step);
    }
    return out;
}

std::vector<int> default_slopes() {
    std::vector<int> slopes(kMaxSlopeIndex);
    for (int k = 0; k < kMaxSlopeIndex; ++k) slopes[static_cast<std::size_t>(k)] = k + 1;
    return slopes;
}

ExperimentGrid build_grid(const OnsetWindow& window, std::span<const int> slopes, int n_onsets,
                          std::uint64_t master_seed) {
    if (window.length() < 1) {
        throw Error(ErrorCategory::domain, "empty onset window");
    }
    if (n_onsets < 1 || slopes.empty()) {
        throw Error(ErrorCategory::domain, "grid needs at least one slope and one onset");
    }
    ExperimentGrid grid;
    grid.master_seed = master_seed;
    grid.n_onsets = n_onsets;
    grid.slopes.assign(slopes.begin(), slopes.end());
    grid.cases.reserve(slopes.size() * static_cast<std::size_t>(n_onsets));

    std::unordered_set<std::uint64_t> seen_seeds;
    for (int slope : slopes) {
        if (slope < kMinSlopeIndex || slope > kMaxSlopeIndex) {
            throw Error(ErrorCategory::domain, "slope_index must be in [1, 10]");
        }
        const auto onsets = sample_onsets(
            window, n_onsets,
            derive_seed(master_seed, "onsets", static_cast<std::uint64_t>(slope)));
        for (int ordinal = 0; ordinal < n_onsets; ++ordinal) {
            ExperimentCase c;
            c.slope_index = slope;
            c.onset_step = onsets[static_cast<std::size_t>(ordinal)];
            c.case_seed = derive_seed(derive_seed(master_seed, "slope",
                                                  static_cast<std::uint64_t>(slope)),
                                      "onset", static_cast<std::uint64_t>(ordinal));
            if (!seen_seeds.insert(c.case_seed).second) {
                throw Error(ErrorCategory::numeric, "case seed collision in grid");
            }
            grid.cases.push_back(c);
        }
    }
    return grid;
}

void write_grid_manifest_csv(const ExperimentGrid& grid, std::ostream& out) {
    out << "slope_index,onset_step,case_seed\n";
    for (const ExperimentCase& c : grid.cases) {
        out << c.slope_index << ',' << c.onset_step << ',' << c.case_seed << '\n';
    }
}

std::vector<ExperimentCase> read_grid_manifest_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "slope_index,onset_step,case_seed") {
        throw Error(ErrorCategory::parse, "grid manifest: bad header");
    }
    std::vector<ExperimentCase> cases;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "grid manifest line " + std::to_string(line_no);
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw Error(ErrorCategory::parse, where + ": expected 3 fields");
        }
        ExperimentCase c;
        c.slope_index = static_cast<int>(parse_int(line.substr(0, c1), where));
        c.onset_step = parse_int(line.substr(c1 + 1, c2 - c1 - 1), where);
        c.case_seed = parse_u64(line.substr(c2 + 1), where);
        cases.push_back(c);
    }
    return cases;
}

}  // namespace windnbm
