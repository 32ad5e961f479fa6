#pragma once

// Dense elementwise and reduction kernels over contiguous double arrays.
//
// Every kernel has a portable scalar reference implementation and, where the
// build and the running CPU allow it, a vectorized variant (AVX2 on x86-64,
// NEON on aarch64). The backend is picked once at first use from the CPU
// feature flags and can be overridden with GRAMSEL_KERNELS=scalar or through
// set_backend().
//
// Elementwise kernels (accumulate, axpy, scale) are bit-identical across
// backends: they use no fused multiply-add. Reductions (dot, sum_squares)
// reassociate and agree with the scalar path only to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace gramsel::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend b);

/// Best backend this binary was built with and this CPU supports.
Backend detect_backend();

Backend active_backend();

/// Forces a backend. Throws std::invalid_argument if it is unavailable here.
void set_backend(Backend b);

bool backend_available(Backend b);

// y[i] += x[i]
void accumulate(std::span<double> y, std::span<const double> x);
// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y);
// y[i] *= a
void scale(double a, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);

// Per-backend entry points, exposed for equivalence testing.
namespace scalar {
void accumulate(double* y, const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace scalar

#if defined(GRAMSEL_HAVE_AVX2)
namespace avx2 {
void accumulate(double* y, const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(GRAMSEL_HAVE_NEON)
namespace neon {
void accumulate(double* y, const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace gramsel::kernels
