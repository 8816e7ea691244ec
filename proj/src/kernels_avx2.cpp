#include "adoptkit/kernels.hpp"

#include <immintrin.h>

// Built with -mavx2 -mfma only in this translation unit; callers reach these
// through the runtime dispatcher. Horizontal sums fold lanes pairwise so the
// lane-combination order is fixed.
namespace adoptkit::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

} // namespace

double reduce_add_avx2(std::span<const double> x) {
    const double* p = x.data();
    std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += p[i];
    return s;
}

double reduce_sq_dev_avx2(std::span<const double> x, double mu) {
    const double* p = x.data();
    std::size_t n = x.size();
    __m256d m = _mm256_set1_pd(mu);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), m);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = p[i] - mu;
        s += d * d;
    }
    return s;
}

double dot_avx2(std::span<const double> x, std::span<const double> y) {
    const double* a = x.data();
    const double* b = y.data();
    std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double a, std::span<const double> x, std::span<double> y) {
    const double* px = x.data();
    double* py = y.data();
    std::size_t n = x.size();
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i));
        _mm256_storeu_pd(py + i, r);
    }
    for (; i < n; ++i) py[i] += a * px[i];
}

} // namespace adoptkit::kernels::detail
