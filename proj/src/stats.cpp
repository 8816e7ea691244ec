#include "adoptkit/stats.hpp"
#include "adoptkit/kernels.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adoptkit {

double sample_mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of empty sample");
    return kernels::reduce_add(x) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("variance needs at least 2 observations");
    double mu = sample_mean(x);
    return kernels::reduce_sq_dev(x, mu) / static_cast<double>(x.size() - 1);
}

double students_t_cdf(double x, double df) {
    boost::math::students_t dist(df);
    return boost::math::cdf(dist, x);
}

WelchResult welch_one_tailed(std::span<const double> a, std::span<const double> b, Tail tail) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_one_tailed needs >= 2 observations per sample");
    WelchResult r;
    r.n_a = a.size();
    r.n_b = b.size();
    r.mean_a = sample_mean(a);
    r.mean_b = sample_mean(b);
    r.var_a = sample_variance(a);
    r.var_b = sample_variance(b);

    const double na = static_cast<double>(r.n_a), nb = static_cast<double>(r.n_b);
    const double va = r.var_a / na, vb = r.var_b / nb;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();

    if (va + vb == 0.0) {
        if (r.mean_a == r.mean_b) {
            r.degenerate = true;
            r.t = nan;
            r.df = nan;
            r.p = nan;
            return r;
        }
        // zero spread but distinct means: direction is exact
        r.t = r.mean_a < r.mean_b ? -inf : inf;
        r.df = inf;
        bool extreme = (tail == Tail::Less) == (r.t < 0);
        r.p = extreme ? 0.0 : 1.0;
        return r;
    }

    r.t = (r.mean_a - r.mean_b) / std::sqrt(va + vb);
    // Welch-Satterthwaite, not rounded
    double denom = va * va / (na - 1.0) + vb * vb / (nb - 1.0);
    r.df = (va + vb) * (va + vb) / denom;
    boost::math::students_t dist(r.df);
    r.p = tail == Tail::Less ? boost::math::cdf(dist, r.t)
                             : boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

bool bonferroni_significant(double p, double alpha, int m) {
    if (m <= 0) throw std::invalid_argument("bonferroni_significant: m must be positive");
    if (std::isnan(p)) return false;
    return p < alpha / static_cast<double>(m);
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols_fit needs matched samples of size >= 2");
    double mx = sample_mean(x), my = sample_mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: regressor is constant");
    OlsFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

double logistic(double z) {
    if (z > 36.0) z = 36.0;
    if (z < -36.0) z = -36.0;
    return 1.0 / (1.0 + std::exp(-z));
}

} // namespace adoptkit
