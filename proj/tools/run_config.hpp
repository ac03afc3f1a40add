#ifndef WINDNBM_TOOLS_RUN_CONFIG_HPP
#define WINDNBM_TOOLS_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "windnbm/alarm.hpp"
#include "windnbm/fault.hpp"
#include "windnbm/mlp.hpp"
#include "windnbm/scada.hpp"
#include "windnbm/synthetic.hpp"

namespace windnbm::tools {

enum class DataSource { synthetic, csv };

/// One config file drives every subcommand; schema in docs/config.md. All
/// randomness descends from master_seed through fixed labels, so the
/// pipeline can be re-run piecewise with consistent results.
struct RunConfig {
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir = "out";

    DataSource source = DataSource::synthetic;
    std::filesystem::path csv_path;
    SyntheticConfig synthetic;  // seed is overwritten with master_seed at use

    // Default split: ten months training, one calibration, three monitoring,
    // laid out from the first step of the series.
    std::optional<SplitSpec> explicit_split;
    std::optional<std::int64_t> split_first_step;

    TrainConfig train;  // shared hyperparameters; per-model seeds are derived

    double unit_scale = 0.05;
    int n_onsets = 50;
    std::vector<int> slopes;  // default 1..10
    std::optional<OnsetWindow> onset_window;  // default: first 2016 monitoring steps

    std::vector<AlarmCriterion> criteria = {AlarmCriterion::criterion_1,
                                            AlarmCriterion::criterion_2};
    int n_jobs = 1;
    int trace_cases = 4;
};

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace windnbm::tools

#endif
