#ifndef WINDNBM_SCADA_HPP
#define WINDNBM_SCADA_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace windnbm {

// Step bookkeeping: one step is a 10-minute mean, 144 steps make a day and
// a 30-day month is 4320 steps.
constexpr std::int64_t kStepsPerDay = 144;
constexpr std::int64_t kStepsPerMonth = 4320;
constexpr int kStepMinutes = 10;

/// The six sensor channels of a record (the step index is kept separately).
enum class Channel {
    wind_speed,
    wind_dir,
    air_temp,
    gear_temp,
    oil_temp,
    tr_temp,
};

constexpr std::array<Channel, 6> kAllChannels = {
    Channel::wind_speed, Channel::wind_dir,  Channel::air_temp,
    Channel::gear_temp,  Channel::oil_temp,  Channel::tr_temp,
};

const char* channel_name(Channel c);

/// One 10-minute mean record. Raw units: m/s, degrees [0,360), degrees C.
struct ScadaRecord {
    std::int64_t step = 0;
    double wind_speed = 0.0;
    double wind_dir = 0.0;
    double air_temp = 0.0;
    double gear_temp = 0.0;
    double oil_temp = 0.0;
    double tr_temp = 0.0;

    double& channel(Channel c);
    double channel(Channel c) const;
};

/// Uniformly spaced sequence of records. Step indices are absolute: a slice
/// of a longer series keeps its original step numbering.
struct ScadaSeries {
    std::vector<ScadaRecord> records;
    bool normalized = false;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::int64_t start_step() const { return records.front().step; }
    std::int64_t end_step() const { return records.back().step; }
};

/// Checks ordering, spacing and per-channel domains; throws on violation.
/// Domain checks (wind_speed >= 0, wind_dir in [0,360)) apply to raw series
/// only; a normalized series is checked for spacing and finiteness.
void validate_series(const ScadaSeries& series);

// CSV interface: header `step,wind_speed,wind_dir,air_temp,gear_temp,oil_temp,tr_temp`,
// one row per step, shortest round-trip decimals, UTF-8.
ScadaSeries load_scada_csv(const std::filesystem::path& path);
void save_scada_csv(const ScadaSeries& series, const std::filesystem::path& path);
void write_scada_csv(const ScadaSeries& series, std::ostream& out);

struct ChannelRange {
    double min = 0.0;
    double max = 1.0;
};

/// Per-channel min/max pairs mapping observed [min,max] onto [0,1].
struct NormalizationParams {
    std::array<std::optional<ChannelRange>, 6> ranges;

    const std::optional<ChannelRange>& range(Channel c) const {
        return ranges[static_cast<std::size_t>(c)];
    }
    std::optional<ChannelRange>& range(Channel c) {
        return ranges[static_cast<std::size_t>(c)];
    }
};

NormalizationParams fit_normalization(const ScadaSeries& series,
                                      std::span<const Channel> channels = kAllChannels);

/// Applies x -> (x - min) / (max - min) to every requested channel and flips
/// the normalized flag. Requested channels default to everything the params
/// were fitted on being present; a missing channel is an error.
ScadaSeries apply_normalization(const ScadaSeries& series, const NormalizationParams& params,
                                std::span<const Channel> channels = kAllChannels);
ScadaSeries invert_normalization(const ScadaSeries& series, const NormalizationParams& params,
                                 std::span<const Channel> channels = kAllChannels);

void save_normalization_json(const NormalizationParams& params, const std::filesystem::path& path);
NormalizationParams load_normalization_json(const std::filesystem::path& path);

/// Half-open step range [begin, end).
struct StepRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    std::int64_t length() const { return end - begin; }
    bool contains(std::int64_t step) const { return step >= begin && step < end; }
    bool operator==(const StepRange&) const = default;
};

/// Train / calibration / monitoring partition. Ranges must be non-empty,
/// disjoint and ordered train < calibration < monitoring.
struct SplitSpec {
    StepRange train;
    StepRange calibration;
    StepRange monitoring;

    /// Months 1-10 train, month 11 calibration, months 12-14 monitoring,
    /// for a series starting at `first_step`.
    static SplitSpec default_14_months(std::int64_t first_step = 0);
};

void validate_split(const SplitSpec& spec, const ScadaSeries& series);

struct SplitSeries {
    ScadaSeries train;
    ScadaSeries calibration;
    ScadaSeries monitoring;
};

SplitSeries split_series(const ScadaSeries& series, const SplitSpec& spec);

/// Contiguous slice [range.begin, range.end) of a series; errors when the
/// range is empty or not fully covered.
ScadaSeries slice_series(const ScadaSeries& series, const StepRange& range);

}  // namespace windnbm

#endif
