#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "windnbm/alarm.hpp"
#include "windnbm/error.hpp"
#include "windnbm/evaluation.hpp"
#include "windnbm/fault.hpp"
#include "windnbm/mlp.hpp"
#include "windnbm/report_io.hpp"
#include "windnbm/rng.hpp"
#include "windnbm/scada.hpp"
#include "windnbm/synthetic.hpp"

using namespace windnbm;

namespace {

AlarmSeries flags_from(std::vector<std::uint8_t> flags, std::int64_t start = 0, int warmup = 1) {
    AlarmSeries a;
    a.flags = std::move(flags);
    a.start_step = start;
    a.warmup = warmup;
    return a;
}

DetectionOutcome outcome_with(int slope, std::optional<double> delay,
                              std::optional<double> stability = 0.9) {
    DetectionOutcome o;
    o.grid_case.slope_index = slope;
    o.delay_hours = delay;
    o.stability = delay ? stability : std::nullopt;
    return o;
}

// Shared small pipeline: 14 months of synthetic data, quickly trained
// presets, built once for all experiment tests.
struct Pipeline {
    ScadaSeries normalized;
    MlpModel single_model;
    MlpModel multi_model;
    SplitSpec split;

    Pipeline() {
        SyntheticConfig scfg;
        scfg.n_months = 14;
        scfg.seed = 321;
        const auto raw = synthesize_scada(scfg);
        split = SplitSpec::default_14_months();
        const auto params = fit_normalization(slice_series(raw, split.train));
        normalized = apply_normalization(raw, params);

        TrainConfig tcfg;
        tcfg.epochs = 3;
        tcfg.seed = 54;
        single_model = train(make_dataset(slice_series(normalized, split.train), 1),
                             preset_architecture(PresetKind::single_target), tcfg)
                           .first;
        multi_model = train(make_dataset(slice_series(normalized, split.train), 3),
                            preset_architecture(PresetKind::multi_target), tcfg)
                          .first;
    }
};

const Pipeline& pipeline() {
    static const Pipeline p;
    return p;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.split = pipeline().split;
    cfg.end_step = cfg.split.monitoring.end - 1;
    return cfg;
}

ExperimentGrid small_grid(int n_onsets = 3, std::uint64_t seed = 99) {
    const auto& p = pipeline();
    const OnsetWindow window{p.split.monitoring.begin + 200,
                             p.split.monitoring.begin + 200 + 2015};
    const int slopes[] = {10};
    return build_grid(window, slopes, n_onsets, seed);
}

MlpModel zero_model(PresetKind kind) {
    auto model = init_model(preset_architecture(kind), 0);
    for (auto& layer : model.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.bn_scale.begin(), layer.bn_scale.end(), 0.0);
    }
    return model;
}

}  // namespace

TEST_CASE("detection_delay converts steps to hours from the onset") {
    auto a = flags_from(std::vector<std::uint8_t>(400, 0));
    a.flags[200] = 1;
    CHECK(detection_delay(a, 200) == 0.0);                      // alarm at the onset itself
    CHECK(detection_delay(a, 56) == (200 - 56) * 10.0 / 60.0);  // 144 steps -> 24 hours
    CHECK(detection_delay(a, 56) == 24.0);
    CHECK_FALSE(detection_delay(a, 201).has_value());

    const auto none = flags_from(std::vector<std::uint8_t>(100, 0));
    CHECK_FALSE(detection_delay(none, 10).has_value());

    // A flag before the onset is ignored, never a negative delay.
    auto early = flags_from(std::vector<std::uint8_t>(100, 0));
    early.flags[20] = 1;
    CHECK_FALSE(detection_delay(early, 30).has_value());
}

TEST_CASE("detection_stability counts true flags inclusively") {
    auto all = flags_from(std::vector<std::uint8_t>(50, 1));
    CHECK(detection_stability(all, 5, 49) == 1.0);
    CHECK(detection_stability(all, 49, 49) == 1.0);  // single-step window

    auto alt = flags_from(std::vector<std::uint8_t>(20, 0));
    for (int s : {10, 12, 14, 16, 18}) alt.flags[s] = 1;
    CHECK(detection_stability(alt, 10, 19) == 0.5);

    CHECK_THROWS_AS(detection_stability(alt, 11, 19), Error);  // flag at 11 is false
    CHECK_THROWS_AS(detection_stability(alt, 10, 25), Error);  // end outside the series
    CHECK_THROWS_AS(detection_stability(alt, 18, 15), Error);  // inverted range
}

TEST_CASE("false_positives_before_onset") {
    const auto quiet = flags_from(std::vector<std::uint8_t>(100, 0), 0, 48);
    CHECK(false_positives_before_onset(quiet, 80) == 0);

    auto one = flags_from(std::vector<std::uint8_t>(100, 0), 0, 48);
    one.flags[60] = 1;
    CHECK(false_positives_before_onset(one, 80) == 1);
    CHECK(false_positives_before_onset(one, 60) == 0);  // onset at the flag, not before

    // Onset at the warmup boundary leaves an empty interval.
    auto edge = flags_from(std::vector<std::uint8_t>(100, 0), 0, 48);
    edge.flags[47] = 1;
    CHECK(false_positives_before_onset(edge, 47) == 0);
    CHECK(false_positives_before_onset(edge, 48) == 1);
}

TEST_CASE("summarize_slope sample statistics over detected cases") {
    std::vector<DetectionOutcome> two{outcome_with(4, 1.0), outcome_with(4, 3.0)};
    const auto s = summarize_slope(two);
    CHECK(s.slope_index == 4);
    CHECK(s.n_cases == 2);
    CHECK(s.n_detected == 2);
    CHECK(*s.mean_delay_hours == 2.0);
    CHECK(*s.std_delay_hours == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    std::vector<DetectionOutcome> same{outcome_with(2, 10.0), outcome_with(2, 10.0),
                                       outcome_with(2, 10.0)};
    const auto c = summarize_slope(same);
    CHECK(*c.mean_delay_hours == 10.0);
    CHECK(*c.std_delay_hours == 0.0);

    // One undetected case of three: statistics over the two detections.
    std::vector<DetectionOutcome> mixed{outcome_with(7, 1.0), outcome_with(7, std::nullopt),
                                        outcome_with(7, 3.0)};
    const auto m = summarize_slope(mixed);
    CHECK(m.n_cases == 3);
    CHECK(m.n_detected == 2);
    CHECK(*m.mean_delay_hours == 2.0);

    // Zero detections: counts only, statistics undefined.
    std::vector<DetectionOutcome> nothing{outcome_with(1, std::nullopt)};
    const auto z = summarize_slope(nothing);
    CHECK(z.n_detected == 0);
    CHECK_FALSE(z.mean_delay_hours.has_value());
    CHECK_FALSE(z.std_delay_hours.has_value());
    CHECK_FALSE(z.mean_stability.has_value());

    // Single detection: mean defined, standard deviation not.
    std::vector<DetectionOutcome> lone{outcome_with(3, 5.0)};
    CHECK(*summarize_slope(lone).mean_delay_hours == 5.0);
    CHECK_FALSE(summarize_slope(lone).std_delay_hours.has_value());

    std::vector<DetectionOutcome> mixed_slopes{outcome_with(1, 1.0), outcome_with(2, 2.0)};
    CHECK_THROWS_AS(summarize_slope(mixed_slopes), Error);
    CHECK_THROWS_AS(summarize_slope(std::vector<DetectionOutcome>{}), Error);
}

TEST_CASE("run_experiment smoke run populates every block") {
    const auto& p = pipeline();
    const auto grid = small_grid();
    const auto cfg = default_config();
    const auto report = run_experiment(p.normalized, p.single_model, p.multi_model, grid, cfg);

    REQUIRE(report.blocks.size() == 4);
    CHECK(report.blocks[0].model == PresetKind::single_target);
    CHECK(report.blocks[0].criterion == AlarmCriterion::criterion_1);
    CHECK(report.blocks[1].model == PresetKind::single_target);
    CHECK(report.blocks[1].criterion == AlarmCriterion::criterion_2);
    CHECK(report.blocks[2].model == PresetKind::multi_target);
    CHECK(report.blocks[3].model == PresetKind::multi_target);

    CHECK(report.threshold_single.n_calibration == kStepsPerMonth);
    CHECK(report.threshold_single.low_sample_warning);  // one month < 10,000 samples
    CHECK(report.threshold_multi.q999 > 0.0);

    for (const auto& block : report.blocks) {
        REQUIRE(block.outcomes.size() == grid.cases.size());
        int detected = 0;
        for (std::size_t i = 0; i < block.outcomes.size(); ++i) {
            const auto& o = block.outcomes[i];
            CHECK(o.grid_case.case_seed == grid.cases[i].case_seed);
            CHECK(o.model == block.model);
            CHECK(o.criterion == block.criterion);
            if (o.first_alarm_step) {
                ++detected;
                CHECK(*o.first_alarm_step >= o.grid_case.onset_step);
                CHECK(*o.delay_hours >= 0.0);
                CHECK(*o.stability > 0.0);
                CHECK(*o.stability <= 1.0);
            } else {
                CHECK_FALSE(o.delay_hours.has_value());
                CHECK_FALSE(o.stability.has_value());
            }
        }
        CHECK(block.n_detected == detected);
        // Slope 10 with the default unit_scale rises half the normalized
        // range per day; a missed detection would be a bug.
        CHECK(detected == static_cast<int>(grid.cases.size()));
        REQUIRE(block.slopes.size() == 1);
        CHECK(block.slopes[0].slope_index == 10);
        CHECK(block.slopes[0].n_cases == static_cast<int>(grid.cases.size()));
    }

    REQUIRE(report.comparisons.size() == 4);
    CHECK(report.comparisons[0].metric == ComparisonMetric::delay_hours);
    CHECK(report.comparisons[0].criterion == AlarmCriterion::criterion_1);
    CHECK(report.comparisons[1].metric == ComparisonMetric::delay_hours);
    CHECK(report.comparisons[1].criterion == AlarmCriterion::criterion_2);
    CHECK(report.comparisons[2].metric == ComparisonMetric::stability);
    CHECK(report.comparisons[3].metric == ComparisonMetric::stability);
    for (const auto& cmp : report.comparisons) {
        CHECK(cmp.n_pairs + cmp.n_excluded == static_cast<int>(grid.cases.size()));
        if (cmp.status == TTestStatus::ok) {
            REQUIRE(cmp.test.has_value());
            CHECK(cmp.test->n_pairs == cmp.n_pairs);
        } else {
            CHECK_FALSE(cmp.test.has_value());
        }
    }

    CHECK(&find_block(report, PresetKind::multi_target, AlarmCriterion::criterion_2) ==
          &report.blocks[3]);
}

TEST_CASE("run_experiment outcomes match the naive inject-then-predict path") {
    const auto& p = pipeline();
    const auto grid = small_grid(2, 1234);
    const auto cfg = default_config();
    const auto report = run_experiment(p.normalized, p.single_model, p.multi_model, grid, cfg);

    const std::array<const MlpModel*, 2> models = {&p.single_model, &p.multi_model};
    const std::array<PresetKind, 2> kinds = {PresetKind::single_target, PresetKind::multi_target};
    for (std::size_t ci = 0; ci < grid.cases.size(); ++ci) {
        const auto& c = grid.cases[ci];
        FaultSpec spec;
        spec.slope_index = c.slope_index;
        spec.onset_step = c.onset_step;
        spec.unit_scale = cfg.unit_scale;
        const auto injected = inject(p.normalized, Channel::gear_temp, spec);

        for (int m = 0; m < 2; ++m) {
            // Fresh full-path recomputation: slice, predict, subtract.
            const auto mon = slice_series(injected, {cfg.split.monitoring.begin,
                                                     cfg.end_step + 1});
            std::vector<std::array<double, 3>> feats;
            std::vector<double> observed;
            for (const auto& r : mon.records) {
                feats.push_back({r.wind_speed, r.wind_dir, r.air_temp});
                observed.push_back(r.gear_temp);
            }
            const auto flat = predict_series(*models[static_cast<std::size_t>(m)], feats);
            const int k = models[static_cast<std::size_t>(m)]->architecture.output_dim;
            std::vector<double> pred(observed.size());
            for (std::size_t i = 0; i < pred.size(); ++i) {
                pred[i] = flat[i * static_cast<std::size_t>(k)];
            }
            const auto res = residuals(observed, pred, mon.start_step());

            const Threshold& thr = m == 0 ? report.threshold_single : report.threshold_multi;
            for (AlarmCriterion crit : cfg.criteria) {
                const auto alarms = crit == AlarmCriterion::criterion_1
                                        ? alarm_criterion_1(res, thr)
                                        : alarm_criterion_2(res, thr);
                const auto& got =
                    find_block(report, kinds[static_cast<std::size_t>(m)], crit).outcomes[ci];

                const auto first = first_alarm(alarms, c.onset_step);
                REQUIRE(got.first_alarm_step == first);
                if (first) {
                    // Bit equality, not approximate: the cached residual path
                    // must agree with the naive one exactly.
                    CHECK(*got.delay_hours == *detection_delay(alarms, c.onset_step));
                    CHECK(*got.stability ==
                          detection_stability(alarms, *first, cfg.end_step));
                }
                CHECK(got.false_positives_before_onset ==
                      false_positives_before_onset(alarms, c.onset_step));
            }
        }
    }
}

TEST_CASE("identical gear predictions give zero-variance comparisons") {
    const auto& p = pipeline();
    const auto grid = small_grid(3, 5);
    const auto cfg = default_config();
    // Both networks are all-zero, so both predict 0 for the gear channel and
    // the paired differences vanish case by case.
    const auto report = run_experiment(p.normalized, zero_model(PresetKind::single_target),
                                       zero_model(PresetKind::multi_target), grid, cfg);
    CHECK(report.threshold_single.q999 == report.threshold_multi.q999);
    for (const auto& cmp : report.comparisons) {
        if (cmp.n_pairs >= 2) {
            CHECK(cmp.status == TTestStatus::zero_variance);
            CHECK_FALSE(cmp.test.has_value());
        }
    }
    const auto& c1s = find_block(report, PresetKind::single_target, AlarmCriterion::criterion_1);
    const auto& c1m = find_block(report, PresetKind::multi_target, AlarmCriterion::criterion_1);
    for (std::size_t i = 0; i < c1s.outcomes.size(); ++i) {
        CHECK(c1s.outcomes[i].first_alarm_step == c1m.outcomes[i].first_alarm_step);
    }
}

TEST_CASE("run_experiment is schedule-independent") {
    const auto& p = pipeline();
    const auto grid = small_grid(6, 77);
    auto cfg = default_config();
    cfg.n_jobs = 1;
    const auto serial = run_experiment(p.normalized, p.single_model, p.multi_model, grid, cfg);
    cfg.n_jobs = 4;
    const auto parallel = run_experiment(p.normalized, p.single_model, p.multi_model, grid, cfg);
    CHECK(render_report_json(serial) == render_report_json(parallel));

    // Outcome-level equality as well; the JSON does not carry outcomes.
    for (std::size_t b = 0; b < serial.blocks.size(); ++b) {
        for (std::size_t i = 0; i < serial.blocks[b].outcomes.size(); ++i) {
            const auto& s = serial.blocks[b].outcomes[i];
            const auto& q = parallel.blocks[b].outcomes[i];
            CHECK(s.first_alarm_step == q.first_alarm_step);
            CHECK(s.delay_hours == q.delay_hours);
            CHECK(s.stability == q.stability);
            CHECK(s.false_positives_before_onset == q.false_positives_before_onset);
        }
    }
}

TEST_CASE("single criterion runs produce two blocks and two comparisons") {
    const auto& p = pipeline();
    const auto grid = small_grid(2, 8);
    auto cfg = default_config();
    cfg.criteria = {AlarmCriterion::criterion_2};
    const auto report = run_experiment(p.normalized, p.single_model, p.multi_model, grid, cfg);
    CHECK(report.blocks.size() == 2);
    CHECK(report.comparisons.size() == 2);
    CHECK_NOTHROW(find_block(report, PresetKind::single_target, AlarmCriterion::criterion_2));
    CHECK_THROWS_AS(find_block(report, PresetKind::single_target, AlarmCriterion::criterion_1),
                    Error);
}

TEST_CASE("run_experiment validation") {
    const auto& p = pipeline();
    const auto grid = small_grid();
    const auto cfg = default_config();

    auto raw = p.normalized;
    raw.normalized = false;
    try {
        run_experiment(raw, p.single_model, p.multi_model, grid, cfg);
        FAIL("expected state error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::state);
    }

    auto bad_end = cfg;
    bad_end.end_step = cfg.split.monitoring.end;  // one past the last step
    CHECK_THROWS_AS(run_experiment(p.normalized, p.single_model, p.multi_model, grid, bad_end),
                    Error);

    auto no_criteria = cfg;
    no_criteria.criteria.clear();
    CHECK_THROWS_AS(
        run_experiment(p.normalized, p.single_model, p.multi_model, grid, no_criteria), Error);

    auto duplicate = cfg;
    duplicate.criteria = {AlarmCriterion::criterion_1, AlarmCriterion::criterion_1};
    CHECK_THROWS_AS(
        run_experiment(p.normalized, p.single_model, p.multi_model, grid, duplicate), Error);

    auto jobs = cfg;
    jobs.n_jobs = 0;
    CHECK_THROWS_AS(run_experiment(p.normalized, p.single_model, p.multi_model, grid, jobs),
                    Error);

    ExperimentGrid empty;
    CHECK_THROWS_AS(run_experiment(p.normalized, p.single_model, p.multi_model, empty, cfg),
                    Error);

    // Onset outside the monitoring range.
    const int slopes[] = {5};
    const auto outside = build_grid(OnsetWindow{100, 500}, slopes, 2, 1);
    CHECK_THROWS_AS(run_experiment(p.normalized, p.single_model, p.multi_model, outside, cfg),
                    Error);

    // Swapped models fail the output-dimension checks.
    CHECK_THROWS_AS(run_experiment(p.normalized, p.multi_model, p.single_model, grid, cfg),
                    Error);
}
