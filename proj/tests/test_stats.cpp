#include "adoptkit/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace adoptkit;

namespace {

struct WelchFixture {
    const char* name;
    std::vector<double> a, b;
    double t, df, p_less, p_greater;
};

// Frozen output of scipy.stats.ttest_ind(equal_var=False) plus the
// Welch-Satterthwaite df, computed independently before this module existed.
const WelchFixture kFixtures[] = {
    {"basic_5v5",
     {2.1, 2.5, 1.9, 2.3, 2.2},
     {3.1, 3.3, 2.9, 3.5, 3.0},
     -6.531972647421808, 7.9563437926330165, 9.315981786363694e-05, 0.9999068401821364},
    {"uneq_var",
     {10.0, 12.0, 11.5, 10.5, 12.5, 11.0},
     {10.2, 10.3, 10.25, 10.35, 10.4},
     2.4770904983690993, 5.0856145864155335, 0.9723905584499629, 0.027609441550037108},
    {"uneq_n",
     {0.5, 0.7, 0.6},
     {0.55, 0.65, 0.6, 0.62, 0.58, 0.61, 0.59},
     0.0, 2.1737711605139713, 0.5, 0.5},
    {"neg_values",
     {-1.2, -0.8, -1.0, -1.1, -0.9, -1.05},
     {-0.2, -0.3, -0.25, -0.15, -0.35},
     -11.117419436423777, 7.998930862437633, 1.9164835601784833e-06, 0.9999980835164398},
    {"close_means",
     {5.0, 5.1, 4.9, 5.05, 4.95, 5.02, 4.98},
     {5.01, 5.12, 4.91, 5.06, 4.96},
     -0.2704812568752154, 7.43284503683486, 0.39707385453451416, 0.6029261454654858},
    {"wide_spread",
     {100.0, 150.0, 120.0, 130.0, 110.0, 140.0, 125.0, 135.0},
     {128.0, 129.0, 127.5, 128.5, 129.5, 127.0},
     -0.3483753152900093, 7.062165194444007, 0.3688563686606684, 0.6311436313393316},
};

} // namespace

TEST_CASE("welch matches the reference implementation to 1e-9") {
    for (const auto& fx : kFixtures) {
        CAPTURE(fx.name);
        const WelchResult less = welch_one_tailed(fx.a, fx.b, Tail::Less);
        const WelchResult greater = welch_one_tailed(fx.a, fx.b, Tail::Greater);
        CHECK(std::abs(less.t - fx.t) < 1e-9);
        CHECK(std::abs(less.df - fx.df) < 1e-9);
        CHECK(std::abs(less.p - fx.p_less) < 1e-9);
        CHECK(std::abs(greater.p - fx.p_greater) < 1e-9);
        CHECK(greater.t == less.t);
        CHECK_FALSE(less.degenerate);
    }
}

TEST_CASE("students t cdf spot values") {
    CHECK(std::abs(students_t_cdf(-2.25, 3.5) - 0.04860824305959402) < 1e-9);
    CHECK(std::abs(students_t_cdf(1.75, 12.0) - 0.9471902305074811) < 1e-9);
    CHECK(std::abs(students_t_cdf(-0.5, 1.0) - 0.3524163823495668) < 1e-9);
    CHECK(std::abs(students_t_cdf(3.1, 77.3) - 0.9986501913352869) < 1e-9);
    // tail symmetry
    CHECK(students_t_cdf(1.3, 7.0) + students_t_cdf(-1.3, 7.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical samples give t = 0 and one-tailed p = 0.5") {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    const WelchResult r = welch_one_tailed(a, a, Tail::Less);
    CHECK(r.t == 0.0);
    CHECK(r.p == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mean shift fixes the sign of t under tail=less") {
    std::vector<double> a = {3.0, 1.0, 2.0, 2.5};
    std::vector<double> b = a;
    for (auto& v : b) v += 10.0;
    CHECK(welch_one_tailed(a, b, Tail::Less).t < 0.0);
    CHECK(welch_one_tailed(b, a, Tail::Less).t > 0.0);
}

TEST_CASE("welch antisymmetry in the sample order") {
    const auto& fx = kFixtures[1];
    const WelchResult ab = welch_one_tailed(fx.a, fx.b, Tail::Less);
    const WelchResult ba = welch_one_tailed(fx.b, fx.a, Tail::Less);
    CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    CHECK(ab.df == doctest::Approx(ba.df).epsilon(1e-12));
}

TEST_CASE("welch invariances: shift both samples, rescale both samples") {
    const auto& fx = kFixtures[0];
    const WelchResult base = welch_one_tailed(fx.a, fx.b, Tail::Less);

    std::vector<double> a = fx.a, b = fx.b;
    for (auto& v : a) v += 17.25;
    for (auto& v : b) v += 17.25;
    const WelchResult shifted = welch_one_tailed(a, b, Tail::Less);
    CHECK(shifted.t == doctest::Approx(base.t).epsilon(1e-10));
    CHECK(shifted.p == doctest::Approx(base.p).epsilon(1e-10));

    a = fx.a;
    b = fx.b;
    for (auto& v : a) v *= 3.5;
    for (auto& v : b) v *= 3.5;
    const WelchResult scaled = welch_one_tailed(a, b, Tail::Less);
    CHECK(scaled.t == doctest::Approx(base.t).epsilon(1e-10));
    CHECK(scaled.df == doctest::Approx(base.df).epsilon(1e-10));
}

TEST_CASE("degenerate and near-degenerate samples") {
    std::vector<double> flat = {2.0, 2.0, 2.0};
    const WelchResult same = welch_one_tailed(flat, flat, Tail::Less);
    CHECK(same.degenerate);
    CHECK(std::isnan(same.p));

    std::vector<double> higher = {3.0, 3.0};
    const WelchResult split = welch_one_tailed(flat, higher, Tail::Less);
    CHECK_FALSE(split.degenerate);
    CHECK(split.t == -std::numeric_limits<double>::infinity());
    CHECK(split.p == 0.0);
    CHECK(welch_one_tailed(higher, flat, Tail::Less).p == 1.0);

    std::vector<double> single = {1.0};
    std::vector<double> pair = {1.0, 2.0};
    CHECK_THROWS_AS(welch_one_tailed(single, pair, Tail::Less), std::invalid_argument);
}

TEST_CASE("bonferroni thresholds") {
    CHECK_FALSE(bonferroni_significant(0.001, 0.001, 8)); // needs p < 1.25e-4
    CHECK(bonferroni_significant(1e-6, 0.001, 8));
    CHECK(bonferroni_significant(0.04, 0.05, 1));
    CHECK_FALSE(bonferroni_significant(0.06, 0.05, 1));
    CHECK_FALSE(bonferroni_significant(std::numeric_limits<double>::quiet_NaN(), 0.05, 1));
    CHECK_THROWS_AS(bonferroni_significant(0.01, 0.05, 0), std::invalid_argument);
}

TEST_CASE("sample moments") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(sample_mean(x) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(sample_variance(x) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("ols recovers an exact line and rejects constant x") {
    std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
    std::vector<double> y;
    for (double v : x) y.push_back(-1.5 * v + 4.0);
    const OlsFit fit = ols_fit(x, y);
    CHECK(fit.slope == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(4.0).epsilon(1e-12));

    std::vector<double> cx = {2.0, 2.0, 2.0};
    CHECK_THROWS_AS(ols_fit(cx, x), std::invalid_argument);
}

TEST_CASE("logistic is a clamped sigmoid") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(logistic(1e6) < 1.0);
    CHECK(logistic(1e6) > 0.9999999);
    CHECK(logistic(-1e6) > 0.0);
    CHECK(logistic(-1e6) < 1e-7);
    CHECK(logistic(3.0) + logistic(-3.0) == doctest::Approx(1.0).epsilon(1e-15));
}
