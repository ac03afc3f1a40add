#include "windnbm/scada.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "windnbm/error.hpp"
#include "windnbm/format.hpp"

#include "json.hpp"

namespace windnbm {

const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::io: return "io";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::domain: return "domain";
        case ErrorCategory::config: return "config";
        case ErrorCategory::state: return "state";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::wind_speed: return "wind_speed";
        case Channel::wind_dir: return "wind_dir";
        case Channel::air_temp: return "air_temp";
        case Channel::gear_temp: return "gear_temp";
        case Channel::oil_temp: return "oil_temp";
        case Channel::tr_temp: return "tr_temp";
    }
    return "unknown";
}

double& ScadaRecord::channel(Channel c) {
    switch (c) {
        case Channel::wind_speed: return wind_speed;
        case Channel::wind_dir: return wind_dir;
        case Channel::air_temp: return air_temp;
        case Channel::gear_temp: return gear_temp;
        case Channel::oil_temp: return oil_temp;
        case Channel::tr_temp: return tr_temp;
    }
    throw Error(ErrorCategory::domain, "invalid channel");
}

double ScadaRecord::channel(Channel c) const {
    return const_cast<ScadaRecord*>(this)->channel(c);
}

void validate_series(const ScadaSeries& series) {
    if (series.empty()) {
        throw Error(ErrorCategory::domain, "series is empty");
    }
    for (std::size_t i = 0; i < series.records.size(); ++i) {
        const ScadaRecord& r = series.records[i];
        for (Channel c : kAllChannels) {
            if (!std::isfinite(r.channel(c))) {
                throw Error(ErrorCategory::domain,
                            "row " + std::to_string(i + 1) + ": non-finite " +
                                channel_name(c));
            }
        }
        if (i > 0) {
            const std::int64_t gap = r.step - series.records[i - 1].step;
            if (gap != 1) {
                throw Error(ErrorCategory::domain,
                            "row " + std::to_string(i + 1) + ": non-uniform spacing (step " +
                                std::to_string(series.records[i - 1].step) + " -> " +
                                std::to_string(r.step) + ")");
            }
        }
        if (!series.normalized) {
            if (r.wind_speed < 0.0) {
                throw Error(ErrorCategory::domain,
                            "row " + std::to_string(i + 1) + ": wind_speed < 0");
            }
            if (r.wind_dir < 0.0 || r.wind_dir >= 360.0) {
                throw Error(ErrorCategory::domain,
                            "row " + std::to_string(i + 1) + ": wind_dir outside [0, 360)");
            }
        }
    }
}

namespace {

constexpr const char* kCsvHeader = "step,wind_speed,wind_dir,air_temp,gear_temp,oil_temp,tr_temp";

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

}  // namespace

ScadaSeries load_scada_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCategory::parse, path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw Error(ErrorCategory::parse,
                    path.string() + ": bad header, expected '" + kCsvHeader + "'");
    }

    ScadaSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        const auto fields = split_fields(line);
        if (fields.size() != 7) {
            throw Error(ErrorCategory::parse,
                        where + ": expected 7 fields, got " + std::to_string(fields.size()));
        }
        ScadaRecord r;
        r.step = parse_int(fields[0], where);
        for (std::size_t c = 0; c < kAllChannels.size(); ++c) {
            r.channel(kAllChannels[c]) = parse_double(fields[c + 1], where);
        }
        series.records.push_back(r);
    }
    if (series.empty()) {
        throw Error(ErrorCategory::parse, path.string() + ": no data rows");
    }
    validate_series(series);
    return series;
}

void write_scada_csv(const ScadaSeries& series, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const ScadaRecord& r : series.records) {
        out << r.step;
        for (Channel c : kAllChannels) {
            out << ',' << format_double(r.channel(c));
        }
        out << '\n';
    }
}

void save_scada_csv(const ScadaSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    write_scada_csv(series, out);
    if (!out) {
        throw Error(ErrorCategory::io, "write failed for " + path.string());
    }
}

NormalizationParams fit_normalization(const ScadaSeries& series,
                                      std::span<const Channel> channels) {
    if (series.empty()) {
        throw Error(ErrorCategory::domain, "cannot fit normalization on empty series");
    }
    NormalizationParams params;
    for (Channel c : channels) {
        double lo = series.records.front().channel(c);
        double hi = lo;
        for (const ScadaRecord& r : series.records) {
            lo = std::min(lo, r.channel(c));
            hi = std::max(hi, r.channel(c));
        }
        if (!(hi > lo)) {
            throw Error(ErrorCategory::numeric,
                        std::string("degenerate range for channel ") + channel_name(c));
        }
        params.range(c) = ChannelRange{lo, hi};
    }
    return params;
}

namespace {

ScadaSeries transform_channels(const ScadaSeries& series, const NormalizationParams& params,
                               std::span<const Channel> channels, bool forward) {
    ScadaSeries out = series;
    for (Channel c : channels) {
        const auto& range = params.range(c);
        if (!range) {
            throw Error(ErrorCategory::domain,
                        std::string("channel ") + channel_name(c) + " missing from params");
        }
        const double span = range->max - range->min;
        for (ScadaRecord& r : out.records) {
            double& v = r.channel(c);
            v = forward ? (v - range->min) / span : v * span + range->min;
        }
    }
    out.normalized = forward;
    return out;
}

}  // namespace

ScadaSeries apply_normalization(const ScadaSeries& series, const NormalizationParams& params,
                                std::span<const Channel> channels) {
    return transform_channels(series, params, channels, true);
}

ScadaSeries invert_normalization(const ScadaSeries& series, const NormalizationParams& params,
                                 std::span<const Channel> channels) {
    return transform_channels(series, params, channels, false);
}

void save_normalization_json(const NormalizationParams& params,
                             const std::filesystem::path& path) {
    nlohmann::json j;
    for (Channel c : kAllChannels) {
        if (const auto& range = params.range(c)) {
            j[channel_name(c)] = {{"min", range->min}, {"max", range->max}};
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

NormalizationParams load_normalization_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::parse, path.string() + ": " + e.what());
    }
    NormalizationParams params;
    for (Channel c : kAllChannels) {
        if (auto it = j.find(channel_name(c)); it != j.end()) {
            params.range(c) = ChannelRange{it->at("min").get<double>(),
                                           it->at("max").get<double>()};
        }
    }
    return params;
}

SplitSpec SplitSpec::default_14_months(std::int64_t first_step) {
    SplitSpec spec;
    spec.train = {first_step, first_step + 10 * kStepsPerMonth};
    spec.calibration = {spec.train.end, spec.train.end + kStepsPerMonth};
    spec.monitoring = {spec.calibration.end, spec.calibration.end + 3 * kStepsPerMonth};
    return spec;
}

void validate_split(const SplitSpec& spec, const ScadaSeries& series) {
    const auto check_range = [&](const StepRange& r, const char* name) {
        if (r.length() <= 0) {
            throw Error(ErrorCategory::config, std::string(name) + " range is empty");
        }
        if (r.begin < series.start_step() || r.end > series.end_step() + 1) {
            throw Error(ErrorCategory::config,
                        std::string(name) + " range out of series bounds");
        }
    };
    check_range(spec.train, "train");
    check_range(spec.calibration, "calibration");
    check_range(spec.monitoring, "monitoring");
    if (spec.train.end > spec.calibration.begin || spec.calibration.end > spec.monitoring.begin) {
        throw Error(ErrorCategory::config,
                    "split ranges must be disjoint and ordered train < calibration < monitoring");
    }
}

ScadaSeries slice_series(const ScadaSeries& series, const StepRange& range) {
    if (range.length() <= 0) {
        throw Error(ErrorCategory::config, "empty slice range");
    }
    if (series.empty() || range.begin < series.start_step() || range.end > series.end_step() + 1) {
        throw Error(ErrorCategory::config, "slice range out of series bounds");
    }
    const std::int64_t offset = range.begin - series.start_step();
    ScadaSeries out;
    out.normalized = series.normalized;
    out.records.assign(series.records.begin() + offset,
                       series.records.begin() + offset + range.length());
    return out;
}

SplitSeries split_series(const ScadaSeries& series, const SplitSpec& spec) {
    validate_split(spec, series);
    SplitSeries parts;
    parts.train = slice_series(series, spec.train);
    parts.calibration = slice_series(series, spec.calibration);
    parts.monitoring = slice_series(series, spec.monitoring);
    return parts;
}

}  // namespace windnbm
