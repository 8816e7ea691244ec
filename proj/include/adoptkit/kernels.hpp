#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used by the statistics and model-fitting code.
// Each kernel has a scalar reference implementation and an AVX2 variant; the
// active set is chosen once at startup from CPU capabilities and can be
// pinned to scalar (for equivalence tests) via force_scalar(). Dispatch is
// per-process, so repeated runs on one machine use identical arithmetic.
namespace adoptkit::kernels {

double reduce_add(std::span<const double> x);

// sum of (x[i] - mu)^2; the two-pass variance path
double reduce_sq_dev(std::span<const double> x, double mu);

double dot(std::span<const double> x, std::span<const double> y);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

// Name of the active variant: "scalar" or "avx2".
std::string_view active_variant();

// Test hook: force the scalar reference path (true) or restore autodetect.
void force_scalar(bool on);

namespace detail {
double reduce_add_scalar(std::span<const double> x);
double reduce_sq_dev_scalar(std::span<const double> x, double mu);
double dot_scalar(std::span<const double> x, std::span<const double> y);
void axpy_scalar(double a, std::span<const double> x, std::span<double> y);
#if defined(ADOPTKIT_HAVE_AVX2)
double reduce_add_avx2(std::span<const double> x);
double reduce_sq_dev_avx2(std::span<const double> x, double mu);
double dot_avx2(std::span<const double> x, std::span<const double> y);
void axpy_avx2(double a, std::span<const double> x, std::span<double> y);
#endif
} // namespace detail

} // namespace adoptkit::kernels
