#include "windnbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "windnbm/error.hpp"

namespace windnbm {

double mean(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorCategory::domain, "mean of empty sequence");
    }
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error(ErrorCategory::domain, "sample_std needs at least 2 values");
    }
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) {
        const double d = v - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta function (modified Lentz).
// Converges fast for x < (a + 1) / (a + b + 2); the caller applies the
// symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
double incomplete_beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    constexpr int max_iter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw Error(ErrorCategory::numeric, "incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw Error(ErrorCategory::domain, "incomplete beta requires a > 0 and b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw Error(ErrorCategory::domain, "incomplete beta requires x in [0, 1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * incomplete_beta_cf(x, a, b) / a;
    }
    return 1.0 - front * incomplete_beta_cf(1.0 - x, b, a) / b;
}

double student_t_cdf(double t, int df) {
    if (df < 1) {
        throw Error(ErrorCategory::domain, "student_t_cdf requires df >= 1");
    }
    if (t == 0.0) return 0.5;
    const double v = static_cast<double>(df);
    const double x = v / (v + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(x, 0.5 * v, 0.5);
    return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          Alternative alternative) {
    if (a.size() != b.size()) {
        throw Error(ErrorCategory::domain, "paired_t_test: length mismatch (" +
                                               std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + ")");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw Error(ErrorCategory::domain, "paired_t_test needs at least 2 pairs");
    }

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

    const double md = mean(d);
    const double sd = sample_std(d);
    if (sd == 0.0) {
        throw Error(ErrorCategory::numeric, "paired_t_test: zero variance of differences");
    }

    TTestResult result;
    result.n_pairs = static_cast<int>(n);
    result.mean_difference = md;
    result.t_statistic = md / (sd / std::sqrt(static_cast<double>(n)));
    result.degrees_of_freedom = static_cast<int>(n) - 1;
    result.alternative = alternative;
    result.p_one_sided = 1.0 - student_t_cdf(result.t_statistic, result.degrees_of_freedom);
    result.p_two_sided =
        2.0 * (1.0 - student_t_cdf(std::fabs(result.t_statistic), result.degrees_of_freedom));
    return result;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorCategory::domain, "spearman needs two equal-length sequences, n >= 2");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = mean(ra);
    const double mb = mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) {
        throw Error(ErrorCategory::numeric, "spearman: constant input sequence");
    }
    return num / std::sqrt(da * db);
}

}  // namespace windnbm
