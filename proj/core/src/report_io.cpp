#include "windnbm/report_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "windnbm/error.hpp"
#include "windnbm/format.hpp"

namespace windnbm {

namespace {

using nlohmann::json;

const char* to_string(Alternative a) {
    return a == Alternative::a_greater ? "a_greater" : "two_sided";
}

json range_json(const StepRange& r) { return json::array({r.begin, r.end}); }

StepRange range_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorCategory::parse, where + ": expected [begin, end]");
    }
    return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

json threshold_json(const Threshold& t) {
    return {{"q999", t.q999},
            {"calibrated_on", range_json(t.calibrated_on)},
            {"n_calibration", t.n_calibration},
            {"low_sample_warning", t.low_sample_warning}};
}

Threshold threshold_from(const json& j, const std::string& where) {
    Threshold t;
    t.q999 = j.at("q999").get<double>();
    t.calibrated_on = range_from(j.at("calibrated_on"), where + ".calibrated_on");
    t.n_calibration = j.at("n_calibration").get<std::int64_t>();
    t.low_sample_warning = j.at("low_sample_warning").get<bool>();
    return t;
}

json optional_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

PresetKind kind_from(const std::string& s, const std::string& where) {
    if (s == "single_target") return PresetKind::single_target;
    if (s == "multi_target") return PresetKind::multi_target;
    throw Error(ErrorCategory::parse, where + ": unknown model kind '" + s + "'");
}

AlarmCriterion criterion_from(const std::string& s, const std::string& where) {
    if (s == "criterion_1") return AlarmCriterion::criterion_1;
    if (s == "criterion_2") return AlarmCriterion::criterion_2;
    throw Error(ErrorCategory::parse, where + ": unknown criterion '" + s + "'");
}

ComparisonMetric metric_from(const std::string& s, const std::string& where) {
    if (s == "delay_hours") return ComparisonMetric::delay_hours;
    if (s == "stability") return ComparisonMetric::stability;
    throw Error(ErrorCategory::parse, where + ": unknown metric '" + s + "'");
}

TTestStatus status_from(const std::string& s, const std::string& where) {
    if (s == "ok") return TTestStatus::ok;
    if (s == "insufficient_pairs") return TTestStatus::insufficient_pairs;
    if (s == "zero_variance") return TTestStatus::zero_variance;
    throw Error(ErrorCategory::parse, where + ": unknown status '" + s + "'");
}

Alternative alternative_from(const std::string& s, const std::string& where) {
    if (s == "a_greater") return Alternative::a_greater;
    if (s == "two_sided") return Alternative::two_sided;
    throw Error(ErrorCategory::parse, where + ": unknown alternative '" + s + "'");
}

json report_to_json(const ComparisonReport& report) {
    json criteria = json::array();
    for (AlarmCriterion c : report.config.criteria) criteria.push_back(to_string(c));

    json blocks = json::array();
    for (const ModelCriterionBlock& block : report.blocks) {
        json slopes = json::array();
        for (const SlopeSummary& s : block.slopes) {
            slopes.push_back({{"slope_index", s.slope_index},
                              {"n_cases", s.n_cases},
                              {"n_detected", s.n_detected},
                              {"mean_delay_hours", optional_json(s.mean_delay_hours)},
                              {"std_delay_hours", optional_json(s.std_delay_hours)},
                              {"mean_stability", optional_json(s.mean_stability)},
                              {"std_stability", optional_json(s.std_stability)}});
        }
        blocks.push_back({{"model", to_string(block.model)},
                          {"criterion", to_string(block.criterion)},
                          {"n_cases", block.outcomes.size()},
                          {"n_detected", block.n_detected},
                          {"slopes", std::move(slopes)}});
    }

    json comparisons = json::array();
    for (const PairedComparison& cmp : report.comparisons) {
        json test = nullptr;
        if (cmp.test) {
            test = {{"n_pairs", cmp.test->n_pairs},
                    {"mean_difference", cmp.test->mean_difference},
                    {"t_statistic", cmp.test->t_statistic},
                    {"degrees_of_freedom", cmp.test->degrees_of_freedom},
                    {"p_one_sided", cmp.test->p_one_sided},
                    {"p_two_sided", cmp.test->p_two_sided},
                    {"alternative", to_string(cmp.test->alternative)}};
        }
        comparisons.push_back({{"criterion", to_string(cmp.criterion)},
                               {"metric", to_string(cmp.metric)},
                               {"n_pairs", cmp.n_pairs},
                               {"n_excluded", cmp.n_excluded},
                               {"status", to_string(cmp.status)},
                               {"test", std::move(test)}});
    }

    return {{"schema_version", kReportSchemaVersion},
            {"config",
             {{"split",
               {{"train", range_json(report.config.split.train)},
                {"calibration", range_json(report.config.split.calibration)},
                {"monitoring", range_json(report.config.split.monitoring)}}},
              {"unit_scale", report.config.unit_scale},
              {"end_step", report.config.end_step},
              {"criteria", std::move(criteria)}}},
            {"grid",
             {{"master_seed", report.grid.master_seed},
              {"n_onsets", report.grid.n_onsets},
              {"slopes", report.grid.slopes},
              {"n_cases", report.grid.cases.size()}}},
            {"thresholds",
             {{"single_target", threshold_json(report.threshold_single)},
              {"multi_target", threshold_json(report.threshold_multi)}}},
            {"blocks", std::move(blocks)},
            {"comparisons", std::move(comparisons)}};
}

}  // namespace

std::string render_report_json(const ComparisonReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

void write_report_json(const ComparisonReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << render_report_json(report);
    if (!out) {
        throw Error(ErrorCategory::io, "write failed for " + path.string());
    }
}

ComparisonReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::parse, path.string() + ": " + e.what());
    }

    try {
        if (doc.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw Error(ErrorCategory::parse, path.string() + ": unsupported schema version");
        }
        ComparisonReport report;
        const json& cfg = doc.at("config");
        const json& split = cfg.at("split");
        report.config.split.train = range_from(split.at("train"), "config.split.train");
        report.config.split.calibration =
            range_from(split.at("calibration"), "config.split.calibration");
        report.config.split.monitoring =
            range_from(split.at("monitoring"), "config.split.monitoring");
        report.config.unit_scale = cfg.at("unit_scale").get<double>();
        report.config.end_step = cfg.at("end_step").get<std::int64_t>();
        report.config.criteria.clear();
        for (const json& c : cfg.at("criteria")) {
            report.config.criteria.push_back(
                criterion_from(c.get<std::string>(), "config.criteria"));
        }

        const json& grid = doc.at("grid");
        report.grid.master_seed = grid.at("master_seed").get<std::uint64_t>();
        report.grid.n_onsets = grid.at("n_onsets").get<int>();
        report.grid.slopes = grid.at("slopes").get<std::vector<int>>();

        const json& thresholds = doc.at("thresholds");
        report.threshold_single =
            threshold_from(thresholds.at("single_target"), "thresholds.single_target");
        report.threshold_multi =
            threshold_from(thresholds.at("multi_target"), "thresholds.multi_target");

        for (const json& b : doc.at("blocks")) {
            ModelCriterionBlock block;
            block.model = kind_from(b.at("model").get<std::string>(), "blocks.model");
            block.criterion =
                criterion_from(b.at("criterion").get<std::string>(), "blocks.criterion");
            block.n_detected = b.at("n_detected").get<int>();
            for (const json& s : b.at("slopes")) {
                SlopeSummary summary;
                summary.slope_index = s.at("slope_index").get<int>();
                summary.n_cases = s.at("n_cases").get<int>();
                summary.n_detected = s.at("n_detected").get<int>();
                summary.mean_delay_hours = optional_from(s.at("mean_delay_hours"));
                summary.std_delay_hours = optional_from(s.at("std_delay_hours"));
                summary.mean_stability = optional_from(s.at("mean_stability"));
                summary.std_stability = optional_from(s.at("std_stability"));
                block.slopes.push_back(summary);
            }
            report.blocks.push_back(std::move(block));
        }

        for (const json& c : doc.at("comparisons")) {
            PairedComparison cmp;
            cmp.criterion =
                criterion_from(c.at("criterion").get<std::string>(), "comparisons.criterion");
            cmp.metric = metric_from(c.at("metric").get<std::string>(), "comparisons.metric");
            cmp.n_pairs = c.at("n_pairs").get<int>();
            cmp.n_excluded = c.at("n_excluded").get<int>();
            cmp.status = status_from(c.at("status").get<std::string>(), "comparisons.status");
            const json& test = c.at("test");
            if (!test.is_null()) {
                TTestResult r;
                r.n_pairs = test.at("n_pairs").get<int>();
                r.mean_difference = test.at("mean_difference").get<double>();
                r.t_statistic = test.at("t_statistic").get<double>();
                r.degrees_of_freedom = test.at("degrees_of_freedom").get<int>();
                r.p_one_sided = test.at("p_one_sided").get<double>();
                r.p_two_sided = test.at("p_two_sided").get<double>();
                r.alternative = alternative_from(test.at("alternative").get<std::string>(),
                                                 "comparisons.test.alternative");
                cmp.test = r;
            }
            report.comparisons.push_back(cmp);
        }
        return report;
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::parse, path.string() + ": " + e.what());
    }
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

std::string opt_field(const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string();
}

}  // namespace

void write_outcomes_csv(const ComparisonReport& report, std::ostream& out) {
    out << "model,criterion,slope_index,onset_step,case_seed,first_alarm_step,delay_hours,"
           "stability,false_positives_before_onset\n";
    for (const ModelCriterionBlock& block : report.blocks) {
        for (const DetectionOutcome& o : block.outcomes) {
            out << to_string(block.model) << ',' << to_string(block.criterion) << ','
                << o.grid_case.slope_index << ',' << o.grid_case.onset_step << ','
                << o.grid_case.case_seed << ',' << opt_field(o.first_alarm_step) << ','
                << opt_field(o.delay_hours) << ',' << opt_field(o.stability) << ','
                << o.false_positives_before_onset << '\n';
        }
    }
}

void write_slope_summary_csv(const ComparisonReport& report, std::ostream& out) {
    out << "model,criterion,slope_index,n_cases,n_detected,mean_delay_hours,std_delay_hours,"
           "mean_stability,std_stability\n";
    for (const ModelCriterionBlock& block : report.blocks) {
        for (const SlopeSummary& s : block.slopes) {
            out << to_string(block.model) << ',' << to_string(block.criterion) << ','
                << s.slope_index << ',' << s.n_cases << ',' << s.n_detected << ','
                << opt_field(s.mean_delay_hours) << ',' << opt_field(s.std_delay_hours) << ','
                << opt_field(s.mean_stability) << ',' << opt_field(s.std_stability) << '\n';
        }
    }
}

void write_ttests_csv(const ComparisonReport& report, std::ostream& out) {
    out << "criterion,metric,n_pairs,n_excluded,status,mean_difference,t_statistic,"
           "degrees_of_freedom,p_one_sided,p_two_sided\n";
    for (const PairedComparison& cmp : report.comparisons) {
        out << to_string(cmp.criterion) << ',' << to_string(cmp.metric) << ',' << cmp.n_pairs
            << ',' << cmp.n_excluded << ',' << to_string(cmp.status) << ',';
        if (cmp.test) {
            out << format_double(cmp.test->mean_difference) << ','
                << format_double(cmp.test->t_statistic) << ',' << cmp.test->degrees_of_freedom
                << ',' << format_double(cmp.test->p_one_sided) << ','
                << format_double(cmp.test->p_two_sided);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

}  // namespace windnbm
