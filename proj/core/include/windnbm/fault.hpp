#ifndef WINDNBM_FAULT_HPP
#define WINDNBM_FAULT_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "windnbm/scada.hpp"

namespace windnbm {

/// One linear over-temperature trend. Slope index k adds
/// k * unit_scale * max(0, t - onset) / 144 normalized units at step t,
/// i.e. k * unit_scale per day from the onset on, with no saturation.
/// unit_scale 0 is the identity trend.
struct FaultSpec {
    int slope_index = 1;
    std::int64_t onset_step = 0;
    double unit_scale = 0.05;
};

constexpr int kMinSlopeIndex = 1;
constexpr int kMaxSlopeIndex = 10;
constexpr std::int64_t kOnsetWindowSteps = 2016;  // 14 days

/// Inclusive step window from which onsets are sampled. Full-protocol runs
/// use a two-week window (2016 steps) inside months 12-13; sampling itself
/// accepts any non-empty window.
struct OnsetWindow {
    std::int64_t start_step = 0;
    std::int64_t end_step = 0;

    std::int64_t length() const { return end_step - start_step + 1; }
};

/// n onsets drawn uniformly with replacement from the window.
std::vector<std::int64_t> sample_onsets(const OnsetWindow& window, int n, std::uint64_t seed);

double trend_value(const FaultSpec& spec, std::int64_t step);

/// Adds the trend to one channel of a normalized series. Only the gear
/// bearing channel is a valid injection target.
ScadaSeries inject(const ScadaSeries& series, Channel channel, const FaultSpec& spec);

struct ExperimentCase {
    int slope_index = 0;
    std::int64_t onset_step = 0;
    std::uint64_t case_seed = 0;
};

struct ExperimentGrid {
    std::vector<ExperimentCase> cases;  // slope-major, onset ordinal within slope
    std::uint64_t master_seed = 0;
    int n_onsets = 0;
    std::vector<int> slopes;
};

/// Default protocol: slopes 1..10 x 50 onsets = 500 cases. Onsets per slope
/// are drawn from an independent sub-stream of master_seed; case seeds are
/// derived from (master_seed, slope, onset ordinal).
ExperimentGrid build_grid(const OnsetWindow& window, std::span<const int> slopes, int n_onsets,
                          std::uint64_t master_seed);

std::vector<int> default_slopes();

/// Re-run manifest: `slope_index,onset_step,case_seed`, one row per case.
void write_grid_manifest_csv(const ExperimentGrid& grid, std::ostream& out);
std::vector<ExperimentCase> read_grid_manifest_csv(std::istream& in);

}  // namespace windnbm

#endif
