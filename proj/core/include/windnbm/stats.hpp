#ifndef WINDNBM_STATS_HPP
#define WINDNBM_STATS_HPP

#include <span>

namespace windnbm {

double mean(std::span<const double> values);

/// Sample standard deviation with divisor n - 1; requires n >= 2.
double sample_std(std::span<const double> values);

/// Regularized incomplete beta function I_x(a, b), evaluated with the
/// modified Lentz continued fraction. Absolute error below 1e-12 over the
/// parameter ranges used here.
double regularized_incomplete_beta(double x, double a, double b);

/// Student-t distribution function F(t; df) for integer df >= 1,
/// via I_x(df/2, 1/2) with x = df / (df + t^2). Absolute error < 1e-10.
double student_t_cdf(double t, int df);

enum class Alternative {
    a_greater,
    two_sided,
};

struct TTestResult {
    int n_pairs = 0;
    double mean_difference = 0.0;
    double t_statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_one_sided = 1.0;  // P[T >= t], the a_greater alternative
    double p_two_sided = 1.0;
    Alternative alternative = Alternative::two_sided;
};

/// Paired t-test on elementwise differences d = a - b:
/// t = mean(d) / (sd(d) / sqrt(n)), df = n - 1.
/// Throws on length mismatch, n < 2, or zero variance of the differences.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b,
                          Alternative alternative);

/// Spearman rank correlation (average ranks on ties).
double spearman_rank_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace windnbm

#endif
