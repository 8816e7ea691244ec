#include "adoptkit/kernels.hpp"

#include <atomic>

namespace adoptkit::kernels {

namespace detail {

double reduce_add_scalar(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
}

double reduce_sq_dev_scalar(std::span<const double> x, double mu) {
    double s = 0.0;
    for (double v : x) {
        double d = v - mu;
        s += d * d;
    }
    return s;
}

double dot_scalar(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

} // namespace detail

namespace {

struct Vtable {
    double (*reduce_add)(std::span<const double>);
    double (*reduce_sq_dev)(std::span<const double>, double);
    double (*dot)(std::span<const double>, std::span<const double>);
    void (*axpy)(double, std::span<const double>, std::span<double>);
    std::string_view name;
};

constexpr Vtable kScalar{detail::reduce_add_scalar, detail::reduce_sq_dev_scalar,
                         detail::dot_scalar, detail::axpy_scalar, "scalar"};

#if defined(ADOPTKIT_HAVE_AVX2)
constexpr Vtable kAvx2{detail::reduce_add_avx2, detail::reduce_sq_dev_avx2,
                       detail::dot_avx2, detail::axpy_avx2, "avx2"};
#endif

const Vtable* detect() {
#if defined(ADOPTKIT_HAVE_AVX2)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Vtable*> g_active{nullptr};

const Vtable* active() {
    const Vtable* v = g_active.load(std::memory_order_acquire);
    if (!v) {
        v = detect();
        g_active.store(v, std::memory_order_release);
    }
    return v;
}

} // namespace

double reduce_add(std::span<const double> x) { return active()->reduce_add(x); }
double reduce_sq_dev(std::span<const double> x, double mu) { return active()->reduce_sq_dev(x, mu); }
double dot(std::span<const double> x, std::span<const double> y) { return active()->dot(x, y); }
void axpy(double a, std::span<const double> x, std::span<double> y) { active()->axpy(a, x, y); }

std::string_view active_variant() { return active()->name; }

void force_scalar(bool on) {
    g_active.store(on ? &kScalar : detect(), std::memory_order_release);
}

} // namespace adoptkit::kernels
