#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "windnbm/alarm.hpp"
#include "windnbm/error.hpp"
#include "windnbm/rng.hpp"

using namespace windnbm;

namespace {

// Naive O(n*w) recomputation of both criteria, used as the reference the
// sliding implementations have to match bit for bit.
std::vector<std::uint8_t> brute_criterion_1(const std::vector<double>& r, double q999) {
    std::vector<std::uint8_t> flags(r.size(), 0);
    for (std::size_t t = 143; t < r.size(); ++t) {
        int count = 0;
        for (std::size_t i = t - 143; i <= t; ++i) {
            if (r[i] > q999) ++count;
        }
        flags[t] = count > 48 ? 1 : 0;
    }
    return flags;
}

std::vector<std::uint8_t> brute_criterion_2(const std::vector<double>& r, double q999) {
    std::vector<std::uint8_t> flags(r.size(), 0);
    for (std::size_t t = 47; t < r.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t - 47; i <= t; ++i) sum += r[i];
        flags[t] = (sum / 48.0 > q999) ? 1 : 0;
    }
    return flags;
}

ResidualSeries make_series(std::vector<double> values, std::int64_t start = 0) {
    ResidualSeries rs;
    rs.values = std::move(values);
    rs.start_step = start;
    return rs;
}

Threshold threshold_at(double q999) {
    Threshold thr;
    thr.q999 = q999;
    return thr;
}

double sorted_percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace

TEST_CASE("residuals are observed minus predicted") {
    const std::vector<double> obs{0.7, 0.9};
    const std::vector<double> pred{0.5, 1.0};
    const auto rs = residuals(obs, pred, 100);
    REQUIRE(rs.values.size() == 2);
    CHECK(rs.values[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(rs.values[1] == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(rs.start_step == 100);

    const auto zero = residuals(obs, obs);
    CHECK(zero.values == std::vector<double>{0.0, 0.0});

    std::vector<double> shifted{0.7, 1.1};
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = obs[i] + 0.2;
    const auto offset = residuals(shifted, obs);
    for (double v : offset.values) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

    CHECK_THROWS_AS(residuals(obs, std::vector<double>{0.1}), Error);
    CHECK_THROWS_AS(residuals(std::vector<double>{1.0 / 0.0}, std::vector<double>{0.0}), Error);
}

TEST_CASE("percentile interpolates between order statistics") {
    std::vector<double> thousand(1000);
    for (int i = 0; i < 1000; ++i) thousand[i] = static_cast<double>(i + 1);
    CHECK(percentile(thousand, 0.999) == doctest::Approx(999.001).epsilon(1e-12));

    // Input order must not matter.
    std::vector<double> shuffled = thousand;
    Rng rng(7);
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
    CHECK(percentile(shuffled, 0.999) == percentile(thousand, 0.999));

    CHECK(percentile(std::vector<double>{0.0, 1.0}, 0.5) == 0.5);
    for (double q : {0.001, 0.25, 0.5, 0.999}) {
        CHECK(percentile(std::vector<double>{4.25, 4.25, 4.25}, q) == 4.25);
    }
    CHECK(percentile(std::vector<double>{42.0}, 0.37) == 42.0);

    CHECK_THROWS_AS(percentile(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(percentile(thousand, 0.0), Error);
    CHECK_THROWS_AS(percentile(thousand, 1.0), Error);
    CHECK_THROWS_AS(percentile(thousand, -0.2), Error);
}

TEST_CASE("percentile matches a sort-based oracle on random input") {
    Rng rng(5150);
    for (int rep = 0; rep < 500; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 400);
        std::vector<double> v(n);
        for (double& x : v) x = rng.next_gaussian() * 3.0;
        const double q = 0.001 + 0.998 * rng.next_unit();
        CHECK(percentile(v, q) == sorted_percentile(v, q));
    }
}

TEST_CASE("calibrate_threshold records metadata and warns on small samples") {
    const auto rs = make_series(std::vector<double>(1000, 0.125), 5000);
    const auto thr = calibrate_threshold(rs);
    CHECK(thr.q999 == 0.125);
    CHECK(thr.n_calibration == 1000);
    CHECK(thr.calibrated_on == StepRange{5000, 6000});
    CHECK(thr.low_sample_warning);

    const auto big = make_series(std::vector<double>(10000, -0.5));
    CHECK_FALSE(calibrate_threshold(big).low_sample_warning);

    CHECK_THROWS_AS(calibrate_threshold(make_series(std::vector<double>(999, 0.0))), Error);
}

TEST_CASE("calibrate_threshold approaches the normal 99.9% quantile") {
    Rng rng(424242);
    std::vector<double> draws(100000);
    for (double& d : draws) d = rng.next_gaussian();
    const auto thr = calibrate_threshold(make_series(std::move(draws)));
    CHECK(std::fabs(thr.q999 - 3.090) < 0.05);
    CHECK(thr.n_calibration == 100000);
    CHECK_FALSE(thr.low_sample_warning);
}

TEST_CASE("criterion 1 fires only above 48 exceedances in 24 hours") {
    // Exceedances exactly at steps 100..148, elsewhere well below threshold.
    std::vector<double> r(400, 0.0);
    for (int i = 100; i <= 148; ++i) r[i] = 2.0;
    const auto alarms = alarm_criterion_1(make_series(r), threshold_at(1.0));
    CHECK(alarms.criterion == AlarmCriterion::criterion_1);
    CHECK(alarms.warmup == 144);
    CHECK(alarms.first_defined_step() == 143);
    CHECK(alarms.flags[147] == 0);  // 48 exceedances in window, not enough
    CHECK(alarms.flags[148] == 1);  // 49 exceedances
    CHECK(alarms.flags[243] == 1);  // last window still holding all 49
    CHECK(alarms.flags[244] == 0);  // step 100 slid out
    CHECK(alarms.flags == brute_criterion_1(r, 1.0));
}

TEST_CASE("criterion 1 under permanent exceedance fires at s + 48") {
    std::vector<double> r(400, 0.0);
    const int s = 200;
    for (std::size_t i = s; i < r.size(); ++i) r[i] = 5.0;
    const auto alarms = alarm_criterion_1(make_series(r), threshold_at(1.0));
    const auto first = first_alarm(alarms, 0);
    REQUIRE(first.has_value());
    CHECK(*first == s + 48);
    CHECK(alarms.flags[s + 47] == 0);
    for (std::size_t i = s + 48; i < r.size(); ++i) CHECK(alarms.flags[i] == 1);
}

TEST_CASE("criterion 1 ignores huge residuals during warmup") {
    const auto alarms = alarm_criterion_1(make_series(std::vector<double>(144, 100.0)),
                                          threshold_at(1.0));
    for (int i = 0; i < 143; ++i) CHECK(alarms.flags[i] == 0);
    CHECK(alarms.flags[143] == 1);
    CHECK_THROWS_AS(alarm_criterion_1(make_series(std::vector<double>(143, 0.0)),
                                      threshold_at(1.0)),
                    Error);
}

TEST_CASE("criterion 1 all-below input never alarms") {
    std::vector<double> r(1000);
    Rng rng(33);
    for (double& x : r) x = rng.next_unit() * 0.9;  // all strictly below 1.0
    const auto alarms = alarm_criterion_1(make_series(r), threshold_at(1.0));
    for (auto f : alarms.flags) CHECK(f == 0);
}

TEST_CASE("criterion 2 pulse example first fires at step 124") {
    std::vector<double> r(400, 0.0);
    for (int i = 100; i <= 199; ++i) r[i] = 2.0;
    const auto alarms = alarm_criterion_2(make_series(r), threshold_at(1.0));
    CHECK(alarms.warmup == 48);
    CHECK(alarms.first_defined_step() == 47);
    CHECK(alarms.flags[123] == 0);  // mean exactly 1.0, strict comparison
    CHECK(alarms.flags[124] == 1);  // 25 * 2 / 48 > 1
    CHECK(first_alarm(alarms, 0) == 124);
    // Mean drops back to exactly 1.0 once only 24 pulse steps remain.
    CHECK(alarms.flags[222] == 1);
    CHECK(alarms.flags[223] == 0);
    CHECK(alarms.flags == brute_criterion_2(r, 1.0));
}

TEST_CASE("criterion 2 step jump matches the ceiling formula off ties") {
    const int s = 200;
    auto jump_to = [&](double v) {
        std::vector<double> r(400, 0.0);
        for (std::size_t i = s; i < r.size(); ++i) r[i] = v;
        return alarm_criterion_2(make_series(r), threshold_at(1.0));
    };
    // 48 * 1.0 / 2.5 = 19.2, so 20 post-jump steps are needed.
    CHECK(first_alarm(jump_to(2.5), 0) == s + 20 - 1);
    // 48 * 1.0 / 1.5 = 32 exactly; the 32-step mean ties and a 33rd is needed.
    CHECK(first_alarm(jump_to(1.5), 0) == s + 32);
    // Integer ratio again: 16 steps of 3.0 average exactly 1.0, strictness
    // pushes the first alarm one step past the ceiling formula.
    const auto tie = jump_to(3.0);
    CHECK(tie.flags[s + 15] == 0);
    CHECK(first_alarm(tie, 0) == s + 16);
}

TEST_CASE("criterion 2 constant series at threshold never alarms") {
    const auto alarms = alarm_criterion_2(make_series(std::vector<double>(300, 1.0)),
                                          threshold_at(1.0));
    for (auto f : alarms.flags) CHECK(f == 0);
    CHECK_THROWS_AS(alarm_criterion_2(make_series(std::vector<double>(47, 0.0)),
                                      threshold_at(1.0)),
                    Error);
}

TEST_CASE("both criteria match brute force on random series") {
    Rng rng(20260823);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 150 + static_cast<int>(rng.next_u64() % 1851);
        std::vector<double> r(n);
        for (double& x : r) x = rng.next_gaussian() + 0.8;  // frequent exceedances
        const double q = 0.5 + rng.next_unit();
        const auto c1 = alarm_criterion_1(make_series(r), threshold_at(q));
        const auto c2 = alarm_criterion_2(make_series(r), threshold_at(q));
        REQUIRE(c1.flags == brute_criterion_1(r, q));
        REQUIRE(c2.flags == brute_criterion_2(r, q));
    }
}

TEST_CASE("criteria are causal: prefixes reproduce prefix flags") {
    Rng rng(99);
    std::vector<double> r(900);
    for (double& x : r) x = rng.next_gaussian() + 0.9;
    const auto full1 = alarm_criterion_1(make_series(r), threshold_at(1.0));
    const auto full2 = alarm_criterion_2(make_series(r), threshold_at(1.0));
    for (std::size_t cut : {200u, 450u, 899u}) {
        const std::vector<double> prefix(r.begin(), r.begin() + cut);
        const auto p1 = alarm_criterion_1(make_series(prefix), threshold_at(1.0));
        const auto p2 = alarm_criterion_2(make_series(prefix), threshold_at(1.0));
        for (std::size_t i = 0; i < cut; ++i) {
            CHECK(p1.flags[i] == full1.flags[i]);
            CHECK(p2.flags[i] == full2.flags[i]);
        }
    }
}

TEST_CASE("raising one residual never clears a flag") {
    Rng rng(123);
    std::vector<double> r(600);
    for (double& x : r) x = rng.next_gaussian() + 0.95;
    const auto base1 = alarm_criterion_1(make_series(r), threshold_at(1.0));
    const auto base2 = alarm_criterion_2(make_series(r), threshold_at(1.0));
    for (int rep = 0; rep < 30; ++rep) {
        auto bumped = r;
        bumped[rng.next_u64() % bumped.size()] += 0.5 + rng.next_unit();
        const auto b1 = alarm_criterion_1(make_series(bumped), threshold_at(1.0));
        const auto b2 = alarm_criterion_2(make_series(bumped), threshold_at(1.0));
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (base1.flags[i]) CHECK(b1.flags[i]);
            if (base2.flags[i]) CHECK(b2.flags[i]);
        }
    }
}

TEST_CASE("alarm series carries absolute step numbering") {
    std::vector<double> r(300, 0.0);
    for (int i = 150; i < 300; ++i) r[i] = 2.0;
    const auto alarms = alarm_criterion_2(make_series(r, 10000), threshold_at(1.0));
    CHECK(alarms.start_step == 10000);
    CHECK(alarms.first_defined_step() == 10047);
    const auto first = first_alarm(alarms, 10000);
    REQUIRE(first.has_value());
    // 24 steps of 2.0 average exactly 1.0; strictness demands a 25th.
    CHECK(*first == 10000 + 150 + 25 - 1);
}

TEST_CASE("first_alarm scans from from_step") {
    AlarmSeries a;
    a.flags = {0, 1, 0, 1};
    a.start_step = 0;
    a.warmup = 1;
    CHECK(first_alarm(a, 2) == 3);
    CHECK(first_alarm(a, 0) == 1);
    CHECK(first_alarm(a, 3) == 3);

    AlarmSeries none;
    none.flags = {0, 0, 0};
    none.start_step = 5;
    none.warmup = 1;
    CHECK_FALSE(first_alarm(none, 5).has_value());
    CHECK_THROWS_AS(first_alarm(none, 4), Error);
    CHECK_THROWS_AS(first_alarm(none, 8), Error);
}

TEST_CASE("alarm trace CSV layout") {
    std::vector<double> r(200, 0.0);
    for (int i = 60; i < 200; ++i) r[i] = 1.5;
    const auto rs = make_series(r, 100);
    const auto thr = threshold_at(1.0);
    const auto c1 = alarm_criterion_1(make_series(std::vector<double>(200, 0.0), 100), thr);
    const auto c2 = alarm_criterion_2(rs, thr);
    std::ostringstream out;
    write_alarm_trace_csv(out, rs, thr, c1, c2);

    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "step,residual,threshold,flag_c1,flag_c2");
    std::size_t rows = 0;
    std::string first_row;
    while (std::getline(in, line)) {
        if (rows == 0) first_row = line;
        ++rows;
    }
    CHECK(rows == 200);
    CHECK(first_row == "100,0,1,0,0");

    const auto misaligned = alarm_criterion_2(make_series(r, 0), thr);
    std::ostringstream sink;
    CHECK_THROWS_AS(write_alarm_trace_csv(sink, rs, thr, c1, misaligned), Error);
}
