#pragma once

#include <cstddef>
#include <span>

namespace adoptkit {

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x); // unbiased, two-pass

enum class Tail { Less, Greater };

struct WelchResult {
    double mean_a = 0.0, mean_b = 0.0;
    double var_a = 0.0, var_b = 0.0;
    std::size_t n_a = 0, n_b = 0;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    // Both variances zero with equal means: t is undefined and p is
    // reported as NaN; callers surface this instead of claiming a result.
    bool degenerate = false;
};

// One-tailed Welch t test. Tail::Less tests H1: mean(a) < mean(b), so a
// true effect in that direction drives t negative and p toward zero.
// Requires at least two observations per sample.
WelchResult welch_one_tailed(std::span<const double> a, std::span<const double> b, Tail tail);

// Student's t CDF, P(T_df <= x).
double students_t_cdf(double x, double df);

// Holds at level alpha after correcting for m comparisons.
bool bonferroni_significant(double p, double alpha, int m);

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line of y on x; throws std::invalid_argument when x is
// constant (slope undefined).
OlsFit ols_fit(std::span<const double> x, std::span<const double> y);

// Sigmoid with the logit clamped to +-36 so the result stays inside (0,1)
// in double precision.
double logistic(double z);

} // namespace adoptkit
