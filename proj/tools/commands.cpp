#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "json.hpp"

#include "windnbm/error.hpp"
#include "windnbm/evaluation.hpp"
#include "windnbm/format.hpp"
#include "windnbm/report_io.hpp"
#include "windnbm/rng.hpp"

namespace windnbm::tools {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ScadaSeries acquire_series(const RunConfig& cfg) {
    if (cfg.source == DataSource::csv) {
        return load_scada_csv(cfg.csv_path);
    }
    SyntheticConfig synth = cfg.synthetic;
    synth.seed = cfg.master_seed;
    validate_synthetic_config(synth);
    return synthesize_scada(synth);
}

SplitSpec resolve_split(const RunConfig& cfg, const ScadaSeries& series) {
    SplitSpec split;
    if (cfg.explicit_split) {
        split = *cfg.explicit_split;
    } else {
        split = SplitSpec::default_14_months(
            cfg.split_first_step.value_or(series.start_step()));
    }
    validate_split(split, series);
    return split;
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
        throw Error(ErrorCategory::io,
                    "cannot create output directory " + cfg.output_dir.string() + ": " +
                        ec.message());
    }
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!(out << content)) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
}

std::uint64_t model_seed(const RunConfig& cfg, PresetKind kind) {
    return derive_seed(cfg.master_seed, to_string(kind));
}

fs::path model_path(const RunConfig& cfg, PresetKind kind) {
    return cfg.output_dir / (std::string(to_string(kind)) + ".model");
}

const std::array<const char*, 3> kTargetNames = {"gear_temp", "oil_temp", "tr_temp"};

// Gear predictions over an inclusive step range of a normalized series.
std::vector<double> predict_gear(const MlpModel& model, const ScadaSeries& normalized,
                                 std::int64_t begin, std::int64_t end) {
    std::vector<std::array<double, 3>> features;
    features.reserve(static_cast<std::size_t>(end - begin + 1));
    const auto offset = static_cast<std::size_t>(begin - normalized.start_step());
    for (std::int64_t s = begin; s <= end; ++s) {
        const ScadaRecord& r =
            normalized.records[offset + static_cast<std::size_t>(s - begin)];
        features.push_back({r.wind_speed, r.wind_dir, r.air_temp});
    }
    const auto flat = predict_series(model, features);
    const int k = model.architecture.output_dim;
    if (k == 1) return flat;
    std::vector<double> gear(features.size());
    for (std::size_t i = 0; i < gear.size(); ++i) gear[i] = flat[i * static_cast<std::size_t>(k)];
    return gear;
}

void write_traces(const RunConfig& cfg, const ScadaSeries& normalized, const SplitSpec& split,
                  const ComparisonReport& report, const MlpModel& single_model,
                  const MlpModel& multi_model) {
    const std::size_t n_traces =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.trace_cases),
                              report.grid.cases.size());
    if (n_traces == 0) return;

    const fs::path dir = cfg.output_dir / "traces";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCategory::io, "cannot create " + dir.string() + ": " + ec.message());
    }

    const std::int64_t begin = split.monitoring.begin;
    const std::int64_t end = report.config.end_step;
    const std::array<const MlpModel*, 2> models = {&single_model, &multi_model};
    const std::array<PresetKind, 2> kinds = {PresetKind::single_target,
                                             PresetKind::multi_target};
    const std::array<const Threshold*, 2> thresholds = {&report.threshold_single,
                                                        &report.threshold_multi};

    std::vector<double> gear;
    gear.reserve(static_cast<std::size_t>(end - begin + 1));
    const auto offset = static_cast<std::size_t>(begin - normalized.start_step());
    for (std::int64_t s = begin; s <= end; ++s) {
        gear.push_back(normalized.records[offset + static_cast<std::size_t>(s - begin)].gear_temp);
    }

    for (int m = 0; m < 2; ++m) {
        const auto pred = predict_gear(*models[static_cast<std::size_t>(m)], normalized, begin, end);
        for (std::size_t i = 0; i < n_traces; ++i) {
            const ExperimentCase& c = report.grid.cases[i];
            FaultSpec spec;
            spec.slope_index = c.slope_index;
            spec.onset_step = c.onset_step;
            spec.unit_scale = cfg.unit_scale;

            ResidualSeries res;
            res.start_step = begin;
            res.values.resize(gear.size());
            for (std::size_t t = 0; t < gear.size(); ++t) {
                const double injected =
                    gear[t] + trend_value(spec, begin + static_cast<std::int64_t>(t));
                res.values[t] = injected - pred[t];
            }
            const Threshold& thr = *thresholds[static_cast<std::size_t>(m)];
            const AlarmSeries c1 = alarm_criterion_1(res, thr);
            const AlarmSeries c2 = alarm_criterion_2(res, thr);

            char name[64];
            std::snprintf(name, sizeof(name), "trace_case%03zu_%s.csv", i,
                          to_string(kinds[static_cast<std::size_t>(m)]));
            std::ofstream out(dir / name, std::ios::binary);
            if (!out) {
                throw Error(ErrorCategory::io, "cannot write " + (dir / name).string());
            }
            write_alarm_trace_csv(out, res, thr, c1, c2);
        }
    }
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
    if (cfg.source != DataSource::synthetic) {
        throw Error(ErrorCategory::config, "synth requires data.source \"synthetic\"");
    }
    const ScadaSeries series = acquire_series(cfg);
    ensure_output_dir(cfg);
    const fs::path path = cfg.output_dir / "scada.csv";
    save_scada_csv(series, path);
    std::cout << "wrote " << path.string() << " (" << series.size() << " rows)\n";
}

void cmd_train(const RunConfig& cfg) {
    const ScadaSeries series = acquire_series(cfg);
    validate_series(series);
    const SplitSpec split = resolve_split(cfg, series);

    const NormalizationParams params = fit_normalization(slice_series(series, split.train));
    const ScadaSeries normalized = apply_normalization(series, params);
    const ScadaSeries norm_train = slice_series(normalized, split.train);
    const ScadaSeries norm_cal = slice_series(normalized, split.calibration);

    ensure_output_dir(cfg);
    save_normalization_json(params, cfg.output_dir / "normalization.json");

    json metrics;
    metrics["held_out_range"] = {split.calibration.begin, split.calibration.end};
    for (PresetKind kind : {PresetKind::single_target, PresetKind::multi_target}) {
        const MlpArchitecture arch = preset_architecture(kind);
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = model_seed(cfg, kind);

        const RegressionDataset train_ds = make_dataset(norm_train, arch.output_dim);
        auto [model, train_report] = train(train_ds, arch, train_cfg);
        save_model(model, model_path(cfg, kind));

        const RegressionDataset cal_ds = make_dataset(norm_cal, arch.output_dim);
        const ErrorMetrics err = evaluate_error(model, cal_ds);

        json entry;
        entry["seed"] = train_cfg.seed;
        entry["epochs_run"] = train_report.epochs_run;
        entry["final_epoch_loss"] = train_report.final_loss;
        json targets = json::array();
        for (int t = 0; t < arch.output_dim; ++t) {
            const Channel channel = t == 0   ? Channel::gear_temp
                                    : t == 1 ? Channel::oil_temp
                                             : Channel::tr_temp;
            const auto& range = params.range(channel);
            const double scale = range->max - range->min;
            targets.push_back({{"name", kTargetNames[static_cast<std::size_t>(t)]},
                               {"rmse", err.rmse[static_cast<std::size_t>(t)]},
                               {"mae", err.mae[static_cast<std::size_t>(t)]},
                               {"rmse_celsius", err.rmse[static_cast<std::size_t>(t)] * scale},
                               {"mae_celsius", err.mae[static_cast<std::size_t>(t)] * scale}});
        }
        entry["targets"] = std::move(targets);
        metrics[to_string(kind)] = std::move(entry);

        std::cout << "trained " << to_string(kind) << ": " << train_report.epochs_run
                  << " epochs, held-out gear rmse "
                  << format_double(err.rmse[0]) << " (normalized)\n";
    }
    write_text_file(cfg.output_dir / "train_metrics.json", metrics.dump(2) + "\n");
}

void cmd_evaluate(const RunConfig& cfg) {
    const ScadaSeries series = acquire_series(cfg);
    validate_series(series);
    const SplitSpec split = resolve_split(cfg, series);

    for (PresetKind kind : {PresetKind::single_target, PresetKind::multi_target}) {
        if (!fs::exists(model_path(cfg, kind))) {
            throw Error(ErrorCategory::io, "missing model file " +
                                               model_path(cfg, kind).string() +
                                               "; run the train command first");
        }
    }
    const NormalizationParams params =
        load_normalization_json(cfg.output_dir / "normalization.json");
    const MlpModel single_model = load_model(model_path(cfg, PresetKind::single_target));
    const MlpModel multi_model = load_model(model_path(cfg, PresetKind::multi_target));

    const ScadaSeries normalized = apply_normalization(series, params);

    OnsetWindow window;
    if (cfg.onset_window) {
        window = *cfg.onset_window;
        if (!split.monitoring.contains(window.start_step) ||
            !split.monitoring.contains(window.end_step)) {
            throw Error(ErrorCategory::config,
                        "fault.onset_window lies outside the monitoring range");
        }
    } else {
        window.start_step = split.monitoring.begin;
        window.end_step =
            std::min(split.monitoring.begin + kOnsetWindowSteps, split.monitoring.end) - 1;
    }
    const ExperimentGrid grid =
        build_grid(window, cfg.slopes, cfg.n_onsets, derive_seed(cfg.master_seed, "grid"));

    ExperimentConfig experiment;
    experiment.split = split;
    experiment.unit_scale = cfg.unit_scale;
    experiment.end_step = split.monitoring.end - 1;
    experiment.criteria = cfg.criteria;
    experiment.n_jobs = cfg.n_jobs;

    const ComparisonReport report =
        run_experiment(normalized, single_model, multi_model, grid, experiment);

    ensure_output_dir(cfg);
    write_report_json(report, cfg.output_dir / "report.json");
    const auto write_csv = [&](const char* name, auto&& writer) {
        const fs::path path = cfg.output_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCategory::io, "cannot write " + path.string());
        writer(out);
        if (!out) throw Error(ErrorCategory::io, "write failed for " + path.string());
    };
    write_csv("outcomes.csv", [&](std::ostream& out) { write_outcomes_csv(report, out); });
    write_csv("slope_summary.csv",
              [&](std::ostream& out) { write_slope_summary_csv(report, out); });
    write_csv("ttests.csv", [&](std::ostream& out) { write_ttests_csv(report, out); });
    write_csv("grid_manifest.csv",
              [&](std::ostream& out) { write_grid_manifest_csv(grid, out); });
    write_traces(cfg, normalized, split, report, single_model, multi_model);

    std::cout << "evaluated " << grid.cases.size() << " cases x " << report.blocks.size()
              << " blocks\n";
    for (const ModelCriterionBlock& block : report.blocks) {
        std::cout << "  " << to_string(block.model) << " / " << to_string(block.criterion)
                  << ": detected " << block.n_detected << "/" << block.outcomes.size() << "\n";
    }
    for (const PairedComparison& cmp : report.comparisons) {
        std::cout << "  t-test " << to_string(cmp.metric) << " / " << to_string(cmp.criterion)
                  << ": " << to_string(cmp.status);
        if (cmp.test) {
            std::cout << ", p_one_sided " << format_double(cmp.test->p_one_sided);
        }
        std::cout << "\n";
    }
}

void cmd_report(const RunConfig& cfg) {
    const fs::path path = cfg.output_dir / "report.json";
    const ComparisonReport report = load_report_json(path);

    // Tables are for reading; full precision lives in report.json.
    const auto fixed3 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    const auto opt = [&](const std::optional<double>& v) {
        return v ? fixed3(*v) : std::string("-");
    };
    const auto sci = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3e", v);
        return std::string(buf);
    };

    const auto fixed6 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    std::cout << "report " << path.string() << "\n\n";
    std::cout << "thresholds (q999, normalized units)\n";
    std::cout << "  single_target " << fixed6(report.threshold_single.q999)
              << (report.threshold_single.low_sample_warning ? "  [low calibration sample]" : "")
              << "\n";
    std::cout << "  multi_target  " << fixed6(report.threshold_multi.q999)
              << (report.threshold_multi.low_sample_warning ? "  [low calibration sample]" : "")
              << "\n\n";

    std::cout << "slope summaries (delay in hours; statistics over detected cases)\n";
    std::cout << "  model          criterion    slope  det  mean_delay  std_delay  mean_stab  "
                 "std_stab\n";
    for (const ModelCriterionBlock& block : report.blocks) {
        for (const SlopeSummary& s : block.slopes) {
            std::cout << "  " << std::left << std::setw(15) << to_string(block.model)
                      << std::setw(13) << to_string(block.criterion) << std::right
                      << std::setw(5) << s.slope_index << std::setw(5) << s.n_detected
                      << std::setw(12) << opt(s.mean_delay_hours) << std::setw(11)
                      << opt(s.std_delay_hours) << std::setw(11) << opt(s.mean_stability)
                      << std::setw(10) << opt(s.std_stability) << "\n";
        }
    }

    std::cout << "\npaired t-tests (single minus multi)\n";
    std::cout << "  criterion    metric       pairs  excl  status              t          "
                 "p_one_sided    p_two_sided\n";
    for (const PairedComparison& cmp : report.comparisons) {
        std::cout << "  " << std::left << std::setw(13) << to_string(cmp.criterion)
                  << std::setw(13) << to_string(cmp.metric) << std::right << std::setw(5)
                  << cmp.n_pairs << std::setw(6) << cmp.n_excluded << "  " << std::left
                  << std::setw(19) << to_string(cmp.status);
        if (cmp.test) {
            std::cout << std::right << std::setw(10) << fixed3(cmp.test->t_statistic)
                      << std::setw(15) << sci(cmp.test->p_one_sided) << std::setw(15)
                      << sci(cmp.test->p_two_sided);
        }
        std::cout << "\n";
    }
}

}  // namespace windnbm::tools
