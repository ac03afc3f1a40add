#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"
#include "run_config.hpp"
#include "windnbm/error.hpp"

namespace {

using windnbm::Error;
using windnbm::ErrorCategory;

// Stable, scriptable mapping from error category to exit status.
int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::io: return 2;
        case ErrorCategory::parse: return 3;
        case ErrorCategory::domain: return 4;
        case ErrorCategory::config: return 5;
        case ErrorCategory::state: return 6;
        case ErrorCategory::numeric: return 7;
    }
    return 1;
}

struct CommonArgs {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

void add_common_flags(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "Run configuration file (JSON)")
        ->required();
    sub->add_option("--out", args.out_dir, "Override the configured output directory");
    sub->add_option("--seed", args.seed, "Override the configured master seed");
    sub->add_option("--jobs", args.jobs, "Worker threads for grid evaluation");
}

windnbm::tools::RunConfig resolve_config(const CommonArgs& args) {
    auto cfg = windnbm::tools::load_run_config(args.config_path);
    if (args.seed) cfg.master_seed = *args.seed;
    if (args.out_dir) cfg.output_dir = *args.out_dir;
    if (args.jobs) cfg.n_jobs = *args.jobs;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wind turbine early fault detection workbench"};
    app.require_subcommand(1);

    CommonArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic SCADA series");
    add_common_flags(synth, synth_args);

    CommonArgs train_args;
    CLI::App* train = app.add_subcommand(
        "train", "Train both normal-behaviour models on the training split");
    add_common_flags(train, train_args);

    CommonArgs evaluate_args;
    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Run the fault-injection grid and write the comparison report");
    add_common_flags(evaluate, evaluate_args);

    CommonArgs report_args;
    CLI::App* report =
        app.add_subcommand("report", "Render summary tables from an existing report");
    add_common_flags(report, report_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            windnbm::tools::cmd_synth(resolve_config(synth_args));
        } else if (train->parsed()) {
            windnbm::tools::cmd_train(resolve_config(train_args));
        } else if (evaluate->parsed()) {
            windnbm::tools::cmd_evaluate(resolve_config(evaluate_args));
        } else if (report->parsed()) {
            windnbm::tools::cmd_report(resolve_config(report_args));
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: unexpected: " << e.what() << "\n";
        return 1;
    }
}
