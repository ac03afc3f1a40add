#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "windnbm/error.hpp"
#include "windnbm/report_io.hpp"

using namespace windnbm;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    const auto p = fs::temp_directory_path() / "windnbm_test_report_io";
    fs::create_directories(p);
    return p;
}

// Hand-built two-block report with one detected and one missed case per
// block, a populated t-test and a degenerate one.
ComparisonReport sample_report() {
    ComparisonReport r;
    r.config.split = SplitSpec::default_14_months();
    r.config.unit_scale = 0.05;
    r.config.end_step = 60479;
    r.config.criteria = {AlarmCriterion::criterion_1};

    r.grid.master_seed = 4242;
    r.grid.n_onsets = 2;
    r.grid.slopes = {3};
    ExperimentCase c0{3, 50000, 111};
    ExperimentCase c1{3, 50100, 222};
    r.grid.cases = {c0, c1};

    r.threshold_single = {0.25, {43200, 47520}, 4320, true};
    r.threshold_multi = {0.125, {43200, 47520}, 4320, true};

    for (PresetKind kind : {PresetKind::single_target, PresetKind::multi_target}) {
        ModelCriterionBlock block;
        block.model = kind;
        block.criterion = AlarmCriterion::criterion_1;

        DetectionOutcome hit;
        hit.grid_case = c0;
        hit.model = kind;
        hit.criterion = block.criterion;
        hit.first_alarm_step = 50144;
        hit.delay_hours = 24.0;
        hit.stability = 0.975;
        DetectionOutcome miss;
        miss.grid_case = c1;
        miss.model = kind;
        miss.criterion = block.criterion;
        miss.false_positives_before_onset = 1;
        block.outcomes = {hit, miss};
        block.n_detected = 1;

        SlopeSummary s;
        s.slope_index = 3;
        s.n_cases = 2;
        s.n_detected = 1;
        s.mean_delay_hours = 24.0;
        s.mean_stability = 0.975;
        // std_* stay undefined with one detection
        block.slopes = {s};
        r.blocks.push_back(std::move(block));
    }

    PairedComparison ok;
    ok.criterion = AlarmCriterion::criterion_1;
    ok.metric = ComparisonMetric::delay_hours;
    ok.n_pairs = 2;
    ok.n_excluded = 0;
    ok.status = TTestStatus::ok;
    TTestResult t;
    t.n_pairs = 2;
    t.mean_difference = 1.5;
    t.t_statistic = 3.0;
    t.degrees_of_freedom = 1;
    t.p_one_sided = 0.102416382349567;
    t.p_two_sided = 0.204832764699134;
    t.alternative = Alternative::a_greater;
    ok.test = t;

    PairedComparison degenerate;
    degenerate.criterion = AlarmCriterion::criterion_1;
    degenerate.metric = ComparisonMetric::stability;
    degenerate.n_pairs = 2;
    degenerate.n_excluded = 0;
    degenerate.status = TTestStatus::zero_variance;

    r.comparisons = {ok, degenerate};
    return r;
}

}  // namespace

TEST_CASE("render_report_json is deterministic with sorted keys") {
    const auto report = sample_report();
    const auto a = render_report_json(report);
    const auto b = render_report_json(report);
    CHECK(a == b);
    CHECK(a.front() == '{');
    CHECK(a.back() == '\n');

    // Top-level keys appear in sorted order.
    const std::vector<std::string> keys{"\"blocks\"",     "\"comparisons\"",
                                        "\"config\"",     "\"grid\"",
                                        "\"schema_version\"", "\"thresholds\""};
    std::size_t last = 0;
    for (const auto& k : keys) {
        const auto pos = a.find(k);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last);
        last = pos;
    }
    CHECK(a.find("\"n_jobs\"") == std::string::npos);  // scheduling must not leak in
}

TEST_CASE("report JSON round trip") {
    const auto dir = test_dir();
    const auto path = dir / "report.json";
    const auto report = sample_report();
    write_report_json(report, path);
    const auto loaded = load_report_json(path);

    CHECK(loaded.config.split.train == report.config.split.train);
    CHECK(loaded.config.split.calibration == report.config.split.calibration);
    CHECK(loaded.config.split.monitoring == report.config.split.monitoring);
    CHECK(loaded.config.unit_scale == report.config.unit_scale);
    CHECK(loaded.config.end_step == report.config.end_step);
    REQUIRE(loaded.config.criteria.size() == 1);
    CHECK(loaded.config.criteria[0] == AlarmCriterion::criterion_1);

    CHECK(loaded.grid.master_seed == 4242);
    CHECK(loaded.grid.n_onsets == 2);
    CHECK(loaded.grid.slopes == std::vector<int>{3});

    CHECK(loaded.threshold_single.q999 == report.threshold_single.q999);
    CHECK(loaded.threshold_single.calibrated_on == report.threshold_single.calibrated_on);
    CHECK(loaded.threshold_multi.n_calibration == 4320);
    CHECK(loaded.threshold_multi.low_sample_warning);

    REQUIRE(loaded.blocks.size() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
        const auto& lb = loaded.blocks[b];
        const auto& rb = report.blocks[b];
        CHECK(lb.model == rb.model);
        CHECK(lb.criterion == rb.criterion);
        CHECK(lb.n_detected == rb.n_detected);
        CHECK(lb.outcomes.empty());  // outcomes live in outcomes.csv only
        REQUIRE(lb.slopes.size() == 1);
        CHECK(lb.slopes[0].slope_index == 3);
        CHECK(lb.slopes[0].n_cases == 2);
        CHECK(lb.slopes[0].mean_delay_hours == 24.0);
        CHECK_FALSE(lb.slopes[0].std_delay_hours.has_value());
        CHECK(lb.slopes[0].mean_stability == 0.975);
    }

    REQUIRE(loaded.comparisons.size() == 2);
    const auto& ok = loaded.comparisons[0];
    CHECK(ok.metric == ComparisonMetric::delay_hours);
    CHECK(ok.status == TTestStatus::ok);
    REQUIRE(ok.test.has_value());
    CHECK(ok.test->t_statistic == 3.0);
    CHECK(ok.test->p_one_sided == 0.102416382349567);  // doubles survive bit-exactly
    CHECK(ok.test->alternative == Alternative::a_greater);
    const auto& zv = loaded.comparisons[1];
    CHECK(zv.status == TTestStatus::zero_variance);
    CHECK_FALSE(zv.test.has_value());

    // Rendering the original twice through a file changes nothing.
    const auto rerendered = dir / "report2.json";
    write_report_json(report, rerendered);
    std::ifstream f1(path), f2(rerendered);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
}

TEST_CASE("load_report_json failure modes") {
    const auto dir = test_dir();
    CHECK_THROWS_AS(load_report_json(dir / "missing.json"), Error);

    const auto invalid = dir / "invalid.json";
    std::ofstream(invalid) << "{broken";
    try {
        load_report_json(invalid);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::parse);
    }

    const auto wrong_version = dir / "version.json";
    std::ofstream(wrong_version) << "{\"schema_version\": 999}";
    CHECK_THROWS_AS(load_report_json(wrong_version), Error);

    const auto missing_keys = dir / "incomplete.json";
    std::ofstream(missing_keys) << "{\"schema_version\": 1}";
    CHECK_THROWS_AS(load_report_json(missing_keys), Error);
}

TEST_CASE("outcomes CSV layout") {
    const auto report = sample_report();
    std::ostringstream out;
    write_outcomes_csv(report, out);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "model,criterion,slope_index,onset_step,case_seed,first_alarm_step,delay_hours,"
          "stability,false_positives_before_onset");

    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);  // 2 blocks x 2 cases
    CHECK(rows[0] == "single_target,criterion_1,3,50000,111,50144,24,0.975,0");
    // Undetected case leaves the optional fields empty.
    CHECK(rows[1] == "single_target,criterion_1,3,50100,222,,,,1");
    CHECK(rows[2].rfind("multi_target,", 0) == 0);
}

TEST_CASE("slope summary CSV layout") {
    const auto report = sample_report();
    std::ostringstream out;
    write_slope_summary_csv(report, out);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "model,criterion,slope_index,n_cases,n_detected,mean_delay_hours,std_delay_hours,"
          "mean_stability,std_stability");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 2);
    // One detection: means present, standard deviations empty.
    CHECK(rows[0] == "single_target,criterion_1,3,2,1,24,,0.975,");
}

TEST_CASE("t-test CSV layout") {
    const auto report = sample_report();
    std::ostringstream out;
    write_ttests_csv(report, out);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "criterion,metric,n_pairs,n_excluded,status,mean_difference,t_statistic,"
          "degrees_of_freedom,p_one_sided,p_two_sided");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "criterion_1,delay_hours,2,0,ok,1.5,3,1,0.102416382349567,"
                     "0.204832764699134");
    CHECK(rows[1] == "criterion_1,stability,2,0,zero_variance,,,,,");
}
